//! End-to-end channels built from an [`ImpedanceSet`].
//!
//! The far-field model keeps, per RIS `k`, the blocks
//! `T_ik = (I + Z_ii Z_i^-1)^-1 Z_ik`, `S_kj = Z_kj (Z_jj + Z_j)^-1` and the
//! coupled self impedance `B̄_k = Z_kk`, so that
//! `H_ij(B) = H̄_ij - Σ_k T_ik (B̄_k + B_k)^-1 S_kj`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::em::ImpedanceSet;
use crate::error::{Error, Result};
use crate::linalg::{c, inverse_guarded, right_solve_guarded, solve_guarded, CMat, CVec};

/// Tunable RIS loads `b_{k,p} = R_0 + j x_{k,p}`. Only the reactances are
/// stored, so the resistive part is `R_0` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfiguration {
    r0: f64,
    reactance: Vec<DVector<f64>>,
}

impl RisConfiguration {
    pub fn new(r0: f64, reactance: Vec<DVector<f64>>) -> Result<Self> {
        if !(r0 >= 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("R_0 = {r0} must be finite and >= 0")));
        }
        if reactance.iter().flat_map(|x| x.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain("RIS reactances must be finite".into()));
        }
        Ok(RisConfiguration { r0, reactance })
    }

    pub fn zeros(r0: f64, ris_count: usize, elements: usize) -> Result<Self> {
        Self::new(r0, vec![DVector::zeros(elements); ris_count])
    }

    /// Reactances drawn uniformly from `[-range, range]` ohms.
    pub fn random<R: Rng>(r0: f64, ris_count: usize, elements: usize, range: f64, rng: &mut R) -> Result<Self> {
        let reactance = (0..ris_count)
            .map(|_| DVector::from_fn(elements, |_, _| rng.random_range(-range..=range)))
            .collect();
        Self::new(r0, reactance)
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn ris_count(&self) -> usize {
        self.reactance.len()
    }

    pub fn reactance(&self, k: usize) -> &DVector<f64> {
        &self.reactance[k]
    }

    /// `b_k` as complex ohms.
    pub fn tunable(&self, k: usize) -> CVec {
        self.reactance[k].map(|x| c(self.r0, x))
    }

    /// `B_k = diag(b_k)`.
    pub fn load_matrix(&self, k: usize) -> CMat {
        CMat::from_diagonal(&self.tunable(k))
    }

    /// Adds a purely imaginary increment `j * dx` to RIS `k`.
    pub fn apply_increment(&mut self, k: usize, dx: &DVector<f64>) -> Result<()> {
        if dx.len() != self.reactance[k].len() {
            return Err(Error::Dimension(format!(
                "increment of length {} for RIS with {} elements",
                dx.len(),
                self.reactance[k].len()
            )));
        }
        if dx.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite reactance increment".into()));
        }
        self.reactance[k] += dx;
        Ok(())
    }
}

/// Far-field channel blocks of a scenario. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ChannelBundle {
    pairs: usize,
    ris_count: usize,
    /// `H̄_{i,j}` at `i * pairs + j`.
    direct: Vec<CMat>,
    /// `T_{i,k}` at `i * ris_count + k`.
    ris_in: Vec<CMat>,
    /// `S_{k,j}` at `k * pairs + j`.
    ris_out: Vec<CMat>,
    /// `B̄_k`.
    ris_self: Vec<CMat>,
}

impl ChannelBundle {
    /// Assembles a bundle from raw blocks (all pairs share L, M and P).
    pub fn from_blocks(
        pairs: usize,
        ris_count: usize,
        direct: Vec<CMat>,
        ris_in: Vec<CMat>,
        ris_out: Vec<CMat>,
        ris_self: Vec<CMat>,
    ) -> Result<Self> {
        let b = ChannelBundle {
            pairs,
            ris_count,
            direct,
            ris_in,
            ris_out,
            ris_self,
        };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<()> {
        let (n, kk) = (self.pairs, self.ris_count);
        if n == 0 {
            return Err(Error::Dimension("at least one transmitter-receiver pair is required".into()));
        }
        if self.direct.len() != n * n
            || self.ris_in.len() != n * kk
            || self.ris_out.len() != kk * n
            || self.ris_self.len() != kk
        {
            return Err(Error::Dimension("channel block counts inconsistent with N_u and K".into()));
        }
        let (l, m) = self.direct[0].shape();
        if self.direct.iter().any(|h| h.shape() != (l, m)) {
            return Err(Error::Dimension("direct blocks must all be L x M".into()));
        }
        if kk > 0 {
            let p = self.ris_self[0].nrows();
            if self.ris_self.iter().any(|b| b.shape() != (p, p))
                || self.ris_in.iter().any(|t| t.shape() != (l, p))
                || self.ris_out.iter().any(|s| s.shape() != (p, m))
            {
                return Err(Error::Dimension("RIS blocks inconsistent with L, M, P".into()));
            }
            for (k, b) in self.ris_self.iter().enumerate() {
                if (0..p).any(|q| !(b[(q, q)].re > 0.0)) {
                    return Err(Error::Domain(format!("B̄_{k} needs a positive real diagonal")));
                }
            }
        }
        let finite = |m: &CMat| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !(self.direct.iter().all(finite)
            && self.ris_in.iter().all(finite)
            && self.ris_out.iter().all(finite)
            && self.ris_self.iter().all(finite))
        {
            return Err(Error::Domain("channel blocks must be finite".into()));
        }
        Ok(())
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn ris_count(&self) -> usize {
        self.ris_count
    }

    /// Receive antennas L.
    pub fn rx_antennas(&self) -> usize {
        self.direct[0].nrows()
    }

    /// Transmit antennas M.
    pub fn tx_antennas(&self) -> usize {
        self.direct[0].ncols()
    }

    /// RIS elements P (0 when there is no RIS).
    pub fn ris_elements(&self) -> usize {
        self.ris_self.first().map_or(0, |b| b.nrows())
    }

    pub fn direct(&self, i: usize, j: usize) -> &CMat {
        &self.direct[i * self.pairs + j]
    }

    pub fn ris_in(&self, i: usize, k: usize) -> &CMat {
        &self.ris_in[i * self.ris_count + k]
    }

    pub fn ris_out(&self, k: usize, j: usize) -> &CMat {
        &self.ris_out[k * self.pairs + j]
    }

    pub fn ris_self(&self, k: usize) -> &CMat {
        &self.ris_self[k]
    }

    pub fn check_configuration(&self, ris: &RisConfiguration) -> Result<()> {
        if ris.ris_count() != self.ris_count
            || (0..ris.ris_count()).any(|k| ris.reactance(k).len() != self.ris_elements())
        {
            return Err(Error::Dimension(format!(
                "RIS configuration ({} surfaces) does not match the bundle ({} surfaces of {} elements)",
                ris.ris_count(),
                self.ris_count,
                self.ris_elements()
            )));
        }
        Ok(())
    }

    /// `X_k = (B̄_k + B_k)^-1`.
    pub fn ris_inverse(&self, ris: &RisConfiguration, k: usize) -> Result<CMat> {
        inverse_guarded(&(self.ris_self(k) + ris.load_matrix(k)), &format!("B̄_{k} + B_{k}"))
    }

    pub fn ris_inverses(&self, ris: &RisConfiguration) -> Result<Vec<CMat>> {
        self.check_configuration(ris)?;
        (0..self.ris_count).map(|k| self.ris_inverse(ris, k)).collect()
    }

    /// `H̃_{i,k,j} = -T_ik X_k S_kj`.
    pub fn scattered(&self, x_k: &CMat, i: usize, k: usize, j: usize) -> CMat {
        -(self.ris_in(i, k) * x_k * self.ris_out(k, j))
    }

    /// `H_ij` for precomputed inverses `X_k`.
    pub fn channel_with_inverses(&self, xs: &[CMat], i: usize, j: usize) -> CMat {
        let mut h = self.direct(i, j).clone();
        for (k, x) in xs.iter().enumerate() {
            h -= self.ris_in(i, k) * x * self.ris_out(k, j);
        }
        h
    }

    /// All `H_ij`, row-major in `(i, j)`.
    pub fn all_channels(&self, xs: &[CMat]) -> Vec<CMat> {
        let n = self.pairs;
        (0..n * n)
            .map(|idx| self.channel_with_inverses(xs, idx / n, idx % n))
            .collect()
    }
}

fn receive_factor(imp: &ImpedanceSet, i: usize) -> Result<CMat> {
    // I_L + Z_ii Z_i^-1 with Z_i diagonal
    let ri = imp.rx(i);
    let zii = imp.block(ri, ri);
    let load = imp.load_diagonal(i);
    let mut m = zii.clone();
    for (col, z) in load.iter().enumerate() {
        m.column_mut(col).iter_mut().for_each(|v| *v /= *z);
    }
    for d in 0..m.nrows() {
        m[(d, d)] += c(1.0, 0.0);
    }
    Ok(m)
}

fn transmit_factor(imp: &ImpedanceSet, j: usize) -> CMat {
    let tj = imp.tx(j);
    imp.block(tj, tj) + imp.generator(j)
}

fn pair_count(imp: &ImpedanceSet) -> Result<usize> {
    use crate::em::GroupKind;
    let n = imp.count(GroupKind::Transmitter);
    if n != imp.count(GroupKind::Receiver) {
        return Err(Error::Dimension(format!(
            "{n} transmitters but {} receivers",
            imp.count(GroupKind::Receiver)
        )));
    }
    Ok(n)
}

/// Builds every far-field block once. With `nlos`, the direct links are zero.
pub fn channel_farfield_bundle(imp: &ImpedanceSet, nlos: bool) -> Result<ChannelBundle> {
    use crate::em::GroupKind;
    let n = pair_count(imp)?;
    let kk = imp.count(GroupKind::Ris);

    let rx_factor: Vec<CMat> = (0..n).map(|i| receive_factor(imp, i)).collect::<Result<_>>()?;
    let tx_factor: Vec<CMat> = (0..n).map(|j| transmit_factor(imp, j)).collect();

    let mut direct = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let zij = imp.block(imp.rx(i), imp.tx(j));
            if nlos {
                direct.push(CMat::zeros(zij.nrows(), zij.ncols()));
            } else {
                let left = solve_guarded(&rx_factor[i], zij, &format!("I_L + Z_{{{i},{i}}} Z_{i}^-1"))?;
                direct.push(right_solve_guarded(&left, &tx_factor[j], &format!("Z_{{{j},{j}}} + Z_{j}"))?);
            }
        }
    }
    let mut ris_in = Vec::with_capacity(n * kk);
    for i in 0..n {
        for k in 0..kk {
            let zik = imp.block(imp.rx(i), imp.ris(k));
            ris_in.push(solve_guarded(&rx_factor[i], zik, &format!("I_L + Z_{{{i},{i}}} Z_{i}^-1"))?);
        }
    }
    let mut ris_out = Vec::with_capacity(kk * n);
    for k in 0..kk {
        for j in 0..n {
            let zkj = imp.block(imp.ris(k), imp.tx(j));
            ris_out.push(right_solve_guarded(zkj, &tx_factor[j], &format!("Z_{{{j},{j}}} + Z_{j}"))?);
        }
    }
    let ris_self = (0..kk).map(|k| imp.block(imp.ris(k), imp.ris(k)).clone()).collect();
    ChannelBundle::from_blocks(n, kk, direct, ris_in, ris_out, ris_self)
}

/// `H_ij(B) = H̄_ij - Σ_k T_ik (B̄_k + B_k)^-1 S_kj`.
pub fn end_to_end_channel(bundle: &ChannelBundle, ris: &RisConfiguration, i: usize, j: usize) -> Result<CMat> {
    let xs = bundle.ris_inverses(ris)?;
    Ok(bundle.channel_with_inverses(&xs, i, j))
}

/// Same bundle with every `B̄_k` replaced by its diagonal. Used for the
/// coupling-unaware design; evaluation still uses the original bundle.
pub fn mcu_impedance_view(bundle: &ChannelBundle) -> ChannelBundle {
    let mut view = bundle.clone();
    for b in &mut view.ris_self {
        let d: CVec = b.diagonal();
        *b = CMat::from_diagonal(&d);
    }
    view
}

/// Full channel between transmitter `j` and receiver `i` through RIS `k`,
/// including all near-field feedback terms. Used to validate the far-field
/// path; it always includes the physical direct coupling `Z_ij`.
pub fn channel_exact(imp: &ImpedanceSet, ris: &RisConfiguration, i: usize, j: usize, k: usize) -> Result<CMat> {
    let (ti, rj, rk) = (imp.tx(j), imp.rx(i), imp.ris(k));
    let zkk = imp.block(rk, rk);
    if ris.reactance(k).len() != zkk.nrows() {
        return Err(Error::Dimension("RIS configuration does not match Z_kk".into()));
    }
    let y = inverse_guarded(&(zkk + ris.load_matrix(k)), &format!("Z_{{{k},{k}}} + Z_tun"))?;
    let psi = |a: usize, b: usize| imp.block(a, b) - imp.block(a, rk) * &y * imp.block(rk, b);
    let psi_jj = psi(ti, ti);
    let psi_ji = psi(ti, rj);
    let psi_ij = psi(rj, ti);
    let psi_ii = psi(rj, rj);

    let zi_inv = CMat::from_diagonal(&imp.load_diagonal(i).map(|z| Complex64::new(1.0, 0.0) / z));
    let gen_inv = inverse_guarded(&(psi_jj + imp.generator(j)), "Psi_jj + Z_j")?;
    let l = psi_ii.nrows();
    let outer = CMat::identity(l, l) + &psi_ii * &zi_inv - &psi_ij * &gen_inv * &psi_ji * &zi_inv;
    let outer_inv = inverse_guarded(&outer, "outer L x L receive matrix")?;
    Ok(outer_inv * psi_ij * gen_inv)
}

/// Per-RIS far-field approximation of [`channel_exact`], including the
/// physical direct term.
pub fn channel_farfield_single(imp: &ImpedanceSet, ris: &RisConfiguration, i: usize, j: usize, k: usize) -> Result<CMat> {
    let (tj, ri, rk) = (imp.tx(j), imp.rx(i), imp.ris(k));
    let rx = receive_factor(imp, i)?;
    let tx = transmit_factor(imp, j);
    let x = inverse_guarded(&(imp.block(rk, rk) + ris.load_matrix(k)), &format!("Z_{{{k},{k}}} + Z_tun"))?;
    let inner = imp.block(ri, tj) - imp.block(ri, rk) * x * imp.block(rk, tj);
    let left = solve_guarded(&rx, &inner, "I_L + Z_ii Z_i^-1")?;
    right_solve_guarded(&left, &tx, "Z_jj + Z_j")
}
