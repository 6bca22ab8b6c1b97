//! Gradient of `Σ_i α_i tr(W_i E_i)` with respect to the imaginary RIS
//! increment `δ_k = j t`, under the linearization `X_k -> X_k - X_k Δ_k X_k`.
//!
//! With `Y_ij = G_i^H H_ij V_j` the objective restricted to `t` reads
//! `t^T Re(M_k) t - 2 Im(u_k)^T t + const`, where
//! `M_k = Σ_i α_i (A_i^H W_i A_i) ⊙ (Σ_j C_j C_j^H)^T` and
//! `u_k[p] = Σ_i α_i (R_i W_i A_i)[p, p]` with `R_i = C_i - Σ_j (D_ij + F_ij)`.

use num_complex::Complex64;

use super::OptimizerState;
use crate::channel::ChannelBundle;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};

/// Gradient blocks for one receiver `i` and RIS `k`, indexed by transmitter `j`.
#[derive(Debug, Clone)]
pub struct GradientBlocks {
    /// `A_ik = -G_i^H T_ik X_k`, L x P.
    pub a: CMat,
    /// `C_kj = X_k S_kj V_j`, P x L.
    pub c: Vec<CMat>,
    /// `D_ikj = C_kj (G_i^H (H̄_ij - T_ik X_k S_kj) V_j)^H`.
    pub d: Vec<CMat>,
    /// `F_ikj = C_kj (G_i^H Σ_{m≠k} H̃_imj V_j)^H`.
    pub f: Vec<CMat>,
    /// Full end-to-end channel `Ĥ_ij` at the current reactances.
    pub h_hat: Vec<CMat>,
}

impl GradientBlocks {
    /// `R_i = C_ki - Σ_j (D_ikj + F_ikj)`.
    fn linear_factor(&self, i: usize) -> CMat {
        let mut r = self.c[i].clone();
        for (d, f) in self.d.iter().zip(&self.f) {
            r -= d;
            r -= f;
        }
        r
    }
}

pub fn build_blocks(state: &OptimizerState, bundle: &ChannelBundle, i: usize, k: usize) -> Result<GradientBlocks> {
    state.check_dimensions(bundle)?;
    state.check_cache()?;
    let n = bundle.pairs();
    let xs = state.inverses();
    let gh = state.g[i].adjoint();
    let a = -(&gh * bundle.ris_in(i, k) * &xs[k]);
    let mut c_blocks = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    let mut h_hat = Vec::with_capacity(n);
    for j in 0..n {
        let vj = &state.precoders.v[j];
        let cj = &xs[k] * bundle.ris_out(k, j) * vj;
        let own = bundle.direct(i, j) + bundle.scattered(&xs[k], i, k, j);
        let mut others = CMat::zeros(own.nrows(), own.ncols());
        for (m, xm) in xs.iter().enumerate() {
            if m != k {
                others += bundle.scattered(xm, i, m, j);
            }
        }
        d.push(&cj * (&gh * &own * vj).adjoint());
        f.push(&cj * (&gh * &others * vj).adjoint());
        h_hat.push(own + others);
        c_blocks.push(cj);
    }
    Ok(GradientBlocks {
        a,
        c: c_blocks,
        d,
        f,
        h_hat,
    })
}

/// `Q(Q1, Q2)` with `Q[l, c P + p] = Q1[l, p] Q2[p, c]`, so that
/// `Q1 diag(δ) Q2 = Q(Q1, Q2) Γ(δ)`.
pub fn q_mapping(q1: &CMat, q2: &CMat) -> Result<CMat> {
    let (l, p) = q1.shape();
    if q2.nrows() != p {
        return Err(Error::Dimension(format!(
            "mapping of {}x{} and {}x{} factors",
            l,
            p,
            q2.nrows(),
            q2.ncols()
        )));
    }
    let cols = q2.ncols();
    Ok(CMat::from_fn(l, p * cols, |row, idx| {
        let (col, pp) = (idx / p, idx % p);
        q1[(row, pp)] * q2[(pp, col)]
    }))
}

/// `Γ(δ)`: `cols` stacked copies of `δ`, block-diagonally, `P cols x cols`.
pub fn gamma_stack(delta: &CVec, cols: usize) -> CMat {
    let p = delta.len();
    let mut g = CMat::zeros(p * cols, cols);
    for l in 0..cols {
        for (q, d) in delta.iter().enumerate() {
            g[(l * p + q, l)] = *d;
        }
    }
    g
}

fn all_blocks(state: &OptimizerState, bundle: &ChannelBundle, k: usize) -> Result<Vec<GradientBlocks>> {
    (0..bundle.pairs()).map(|i| build_blocks(state, bundle, i, k)).collect()
}

/// `(M_k, u_k)` via the Hadamard form.
pub fn assemble_gradient(state: &OptimizerState, bundle: &ChannelBundle, k: usize) -> Result<(CMat, CVec)> {
    let blocks = all_blocks(state, bundle, k)?;
    let p = bundle.ris_elements();
    let weights = &state.precoders.budget.weights;

    let mut s = CMat::zeros(p, p);
    for cj in &blocks[0].c {
        s += cj * cj.adjoint();
    }
    let mut n_sum = CMat::zeros(p, p);
    let mut u = CVec::zeros(p);
    for (i, b) in blocks.iter().enumerate() {
        let alpha = weights[i];
        if alpha == 0.0 {
            continue;
        }
        let wa = &state.w[i] * &b.a;
        n_sum += b.a.adjoint() * &wa * c(alpha, 0.0);
        let r = b.linear_factor(i);
        for q in 0..p {
            let z: Complex64 = r.row(q).iter().zip(wa.column(q).iter()).map(|(x, y)| x * y).sum();
            u[q] += z * alpha;
        }
    }
    let m = CMat::from_fn(p, p, |r, col| n_sum[(r, col)] * s[(col, r)]);
    Ok((m, u))
}

/// `(M_k, u_k)` through the explicit `Q`/`Γ` matrices: `M_k` is the sum of
/// the diagonal `P x P` blocks of `M̃_k = Σ_i α_i Σ_j Q_ij^H W_i Q_ij` and
/// `u_k[p] = Σ_l Ũ_k[l P + p, l]` with `Ũ_k = (Σ_i α_i W_i Q(A_i, R_i))^T`.
pub fn assemble_gradient_via_mapping(
    state: &OptimizerState,
    bundle: &ChannelBundle,
    k: usize,
) -> Result<(CMat, CVec)> {
    let blocks = all_blocks(state, bundle, k)?;
    let p = bundle.ris_elements();
    let l = bundle.rx_antennas();
    let weights = &state.precoders.budget.weights;

    let mut m_tilde = CMat::zeros(p * l, p * l);
    let mut u_tilde_t = CMat::zeros(l, p * l);
    for (i, b) in blocks.iter().enumerate() {
        let alpha = c(weights[i], 0.0);
        for cj in &b.c {
            let q = q_mapping(&b.a, cj)?;
            m_tilde += q.adjoint() * &state.w[i] * q * alpha;
        }
        u_tilde_t += &state.w[i] * q_mapping(&b.a, &b.linear_factor(i))? * alpha;
    }
    let u_tilde = u_tilde_t.transpose();
    let mut m = CMat::zeros(p, p);
    for blk in 0..l {
        m += m_tilde.view((blk * p, blk * p), (p, p));
    }
    let u = CVec::from_fn(p, |q, _| (0..l).map(|blk| u_tilde[(blk * p + q, blk)]).sum());
    Ok((m, u))
}
