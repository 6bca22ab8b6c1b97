//! Random instances and from-scratch reference evaluations shared by the
//! integration tests. Nothing here calls the optimizer's own objective code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ris_sumrate::channel::{ChannelBundle, RisConfiguration};
use ris_sumrate::linalg::{CMat, CVec};
use ris_sumrate::optimizer::{LinkBudget, OptimizerState, PrecoderSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss(rng: &mut impl Rng) -> Complex64 {
    // Box-Muller; adequate for test fixtures.
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt() / std::f64::consts::SQRT_2;
    Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
}

pub fn random_cmat(rng: &mut impl Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| cgauss(rng))
}

pub fn random_cvec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cgauss(rng))
}

/// Hermitian positive definite `L x L` matrix.
pub fn random_hpd(rng: &mut impl Rng, l: usize) -> CMat {
    let a = random_cmat(rng, l, l);
    &a * a.adjoint() + CMat::identity(l, l) * Complex64::new(0.5, 0.0)
}

/// Complex symmetric `B̄` with a dominant diagonal of positive real part.
pub fn random_self_block(rng: &mut impl Rng, p: usize) -> CMat {
    let mut b = CMat::zeros(p, p);
    for r in 0..p {
        b[(r, r)] = Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-3.0..3.0));
        for s in 0..r {
            let z = cgauss(rng) * 0.15;
            b[(r, s)] = z;
            b[(s, r)] = z;
        }
    }
    b
}

pub struct Instance {
    pub bundle: ChannelBundle,
    pub state: OptimizerState,
}

/// Random bundle with `n` pairs, `L = M = l`, `kk` surfaces of `p` elements,
/// and a random (not optimized) receiver/weight state.
pub fn random_instance(seed: u64, n: usize, l: usize, kk: usize, p: usize) -> Instance {
    let mut g = rng(seed);
    let direct = (0..n * n).map(|_| random_cmat(&mut g, l, l) * Complex64::new(0.3, 0.0)).collect();
    let ris_in = (0..n * kk).map(|_| random_cmat(&mut g, l, p)).collect();
    let ris_out = (0..kk * n).map(|_| random_cmat(&mut g, p, l)).collect();
    let ris_self = (0..kk).map(|_| random_self_block(&mut g, p)).collect();
    let bundle = ChannelBundle::from_blocks(n, kk, direct, ris_in, ris_out, ris_self).unwrap();

    let reactance = (0..kk).map(|_| DVector::from_fn(p, |_, _| g.random_range(-1.0..1.0))).collect();
    let ris = RisConfiguration::new(0.2, reactance).unwrap();
    let budget = LinkBudget {
        weights: (0..n).map(|_| g.random_range(0.5..1.5)).collect(),
        power: vec![1.0; n],
        noise: vec![0.1; n],
    };
    let v = (0..n)
        .map(|_| {
            let v = random_cmat(&mut g, l, l);
            let scale = (1.0 / v.norm_squared()).sqrt();
            v * Complex64::new(scale, 0.0)
        })
        .collect();
    let precoders = PrecoderSet::new(v, budget).unwrap();
    let mut state = OptimizerState::new(precoders, ris, &bundle).unwrap();
    state.g = (0..n).map(|_| random_cmat(&mut g, l, l)).collect();
    state.w = (0..n).map(|_| random_hpd(&mut g, l)).collect();
    Instance { bundle, state }
}

/// `H_ij` with explicit `X_k` supplied per surface.
pub fn channels_with(bundle: &ChannelBundle, xs: &[CMat]) -> Vec<CMat> {
    let n = bundle.pairs();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut h = bundle.direct(i, j).clone();
            for (k, x) in xs.iter().enumerate() {
                h -= bundle.ris_in(i, k) * x * bundle.ris_out(k, j);
            }
            out.push(h);
        }
    }
    out
}

/// `E_i = (I - G^H H_ii V_i)(I - G^H H_ii V_i)^H + Σ_{j≠i} G^H H_ij V_j V_j^H H_ij^H G + σ² G^H G`,
/// evaluated term by term.
pub fn mse_reference(h: &[CMat], v: &[CMat], g: &CMat, noise: f64, i: usize) -> CMat {
    let n = v.len();
    let l = g.ncols();
    let gh = g.adjoint();
    let own = CMat::identity(l, l) - &gh * &h[i * n + i] * &v[i];
    let mut e = &own * own.adjoint();
    for j in 0..n {
        if j != i {
            let t = &gh * &h[i * n + j] * &v[j];
            e += &t * t.adjoint();
        }
    }
    e + &gh * g * Complex64::new(noise, 0.0)
}

/// `Σ_i α_i Re tr(W_i E_i)` for the given channels.
pub fn objective_reference(h: &[CMat], state: &OptimizerState) -> f64 {
    let b = &state.precoders.budget;
    (0..b.weights.len())
        .map(|i| {
            let e = mse_reference(h, &state.precoders.v, &state.g[i], b.noise[i], i);
            b.weights[i] * (&state.w[i] * e).trace().re
        })
        .sum()
}

/// Objective with `b_k -> b_k + j t` and the exact inverse.
pub fn objective_exact(inst: &Instance, k: usize, t: &DVector<f64>) -> f64 {
    let mut xs = inst.state.inverses().to_vec();
    let a = inst.bundle.ris_self(k) + inst.state.ris().load_matrix(k)
        + CMat::from_diagonal(&t.map(|x| Complex64::new(0.0, x)));
    xs[k] = a.try_inverse().unwrap();
    objective_reference(&channels_with(&inst.bundle, &xs), &inst.state)
}

/// Objective with `X_k -> X_k - X_k (j diag t) X_k` (quadratic in `t`).
pub fn objective_linearized(inst: &Instance, k: usize, t: &DVector<f64>) -> f64 {
    let mut xs = inst.state.inverses().to_vec();
    let x = &xs[k];
    let delta = CMat::from_diagonal(&t.map(|v| Complex64::new(0.0, v)));
    xs[k] = x - x * delta * x;
    objective_reference(&channels_with(&inst.bundle, &xs), &inst.state)
}

/// Central finite-difference gradient of `f` at `t0`.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, t0: &DVector<f64>, step: f64) -> DVector<f64> {
    DVector::from_fn(t0.len(), |p, _| {
        let mut plus = t0.clone();
        let mut minus = t0.clone();
        plus[p] += step;
        minus[p] -= step;
        (f(&plus) - f(&minus)) / (2.0 * step)
    })
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_err_c(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// `log2 det(I + V^H H^H J^-1 H V)` with `J = Σ_{j≠i} H_ij V_j V_j^H H_ij^H + σ² I`.
pub fn rate_reference(h: &[CMat], v: &[CMat], noise: f64, i: usize) -> f64 {
    let n = v.len();
    let l = h[0].nrows();
    let mut j = CMat::identity(l, l) * Complex64::new(noise, 0.0);
    for m in 0..n {
        if m != i {
            let t = &h[i * n + m] * &v[m];
            j += &t * t.adjoint();
        }
    }
    let hv = &h[i * n + i] * &v[i];
    let s = CMat::identity(v[i].ncols(), v[i].ncols()) + hv.adjoint() * j.try_inverse().unwrap() * &hv;
    s.determinant().re.log2()
}

pub fn real(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}
