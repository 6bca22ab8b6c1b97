//! Rates, MSE matrices and the wMMSE precoder update.
//!
//! Channel lists are row-major in `(i, j)`: `h[i * n + j]` is `H_ij`.
//! The matrix "2 Re(Y)" of the MSE definition is the Hermitian sum `Y + Y^H`.

use std::f64::consts::LN_2;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{LinkBudget, OptimizerState, PrecoderSet};
use crate::channel::{ChannelBundle, RisConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, inverse_guarded, ln_det_hpd, trace, CMat};

/// Relative power error at which the precoder multiplier search stops.
pub const POWER_REL_TOL: f64 = 1e-8;

fn pairs_of(h: &[CMat]) -> usize {
    (h.len() as f64).sqrt().round() as usize
}

/// `E_i` for receive filter `g` and precoders `v` over explicit channels.
pub fn mse_from_channels(h: &[CMat], v: &[CMat], g: &CMat, noise: f64, i: usize) -> CMat {
    let n = pairs_of(h);
    let l = g.ncols();
    let gh = g.adjoint();
    let own = &gh * &h[i * n + i] * &v[i];
    let mut e = CMat::identity(l, l) - &own - own.adjoint() + &gh * g * c(noise, 0.0);
    for j in 0..n {
        let y = &gh * &h[i * n + j] * &v[j];
        e += &y * y.adjoint();
    }
    e
}

/// `E_i(V, G_i, B)` for the state's receive filters and RIS configuration.
pub fn mse_matrix(state: &OptimizerState, bundle: &ChannelBundle, i: usize) -> Result<CMat> {
    state.check_dimensions(bundle)?;
    let h = bundle.all_channels(&state.x);
    Ok(mse_from_channels(
        &h,
        &state.precoders.v,
        &state.g[i],
        state.precoders.budget.noise[i],
        i,
    ))
}

/// `J_i = Σ_j H_ij V_j V_j^H H_ij^H + σ² I`, optionally skipping `j = i`.
fn covariance(h: &[CMat], v: &[CMat], noise: f64, i: usize, include_own: bool) -> CMat {
    let n = pairs_of(h);
    let l = h[i * n].nrows();
    let mut j_mat = CMat::identity(l, l) * c(noise, 0.0);
    for j in 0..n {
        if j == i && !include_own {
            continue;
        }
        let hv = &h[i * n + j] * &v[j];
        j_mat += &hv * hv.adjoint();
    }
    j_mat
}

/// Achievable rate of pair `i` in bits per channel use.
pub fn rate_from_channels(h: &[CMat], v: &[CMat], noise: f64, i: usize) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::Domain(format!("noise power {noise} must be > 0")));
    }
    let n = pairs_of(h);
    let jbar = covariance(h, v, noise, i, false);
    let chol = hermitian_part(&jbar)
        .cholesky()
        .ok_or_else(|| Error::Internal(format!("interference covariance of receiver {i} is not positive definite")))?;
    let hv = &h[i * n + i] * &v[i];
    let whitened = chol
        .l()
        .solve_lower_triangular(&hv)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let s = whitened.ncols();
    let gram = CMat::identity(s, s) + whitened.adjoint() * &whitened;
    let ln_det = ln_det_hpd(&gram).ok_or_else(|| Error::Internal("rate Gram matrix is not positive definite".into()))?;
    Ok((ln_det / LN_2).max(0.0))
}

pub fn rate(precoders: &PrecoderSet, bundle: &ChannelBundle, ris: &RisConfiguration, i: usize) -> Result<f64> {
    let xs = bundle.ris_inverses(ris)?;
    let h = bundle.all_channels(&xs);
    rate_from_channels(&h, &precoders.v, precoders.budget.noise[i], i)
}

pub fn weighted_sum_rate_from_channels(h: &[CMat], precoders: &PrecoderSet) -> Result<f64> {
    let b = &precoders.budget;
    let mut total = 0.0;
    for (i, alpha) in b.weights.iter().enumerate() {
        if *alpha != 0.0 {
            total += alpha * rate_from_channels(h, &precoders.v, b.noise[i], i)?;
        }
    }
    Ok(total)
}

/// `Σ_i α_i R_i`.
pub fn weighted_sum_rate(precoders: &PrecoderSet, bundle: &ChannelBundle, ris: &RisConfiguration) -> Result<f64> {
    let xs = bundle.ris_inverses(ris)?;
    weighted_sum_rate_from_channels(&bundle.all_channels(&xs), precoders)
}

/// MMSE receive filters `G_i = J_i^-1 H_ii V_i`.
pub fn mmse_receivers(h: &[CMat], precoders: &PrecoderSet) -> Result<Vec<CMat>> {
    let n = pairs_of(h);
    (0..n)
        .map(|i| {
            let j_mat = covariance(h, &precoders.v, precoders.budget.noise[i], i, true);
            let inv = inverse_guarded(&j_mat, &format!("J_{i}"))?;
            Ok(inv * &h[i * n + i] * &precoders.v[i])
        })
        .collect()
}

/// MSE weights `W_i = E_i^-1`, Hermitian by construction.
pub fn mse_weights(h: &[CMat], precoders: &PrecoderSet, g: &[CMat]) -> Result<Vec<CMat>> {
    g.iter()
        .enumerate()
        .map(|(i, gi)| {
            let e = hermitian_part(&mse_from_channels(h, &precoders.v, gi, precoders.budget.noise[i], i));
            Ok(hermitian_part(&inverse_guarded(&e, &format!("E_{i}"))?))
        })
        .collect()
}

/// `Σ_i α_i Re tr(W_i E_i)`.
pub fn wmse_objective(h: &[CMat], precoders: &PrecoderSet, g: &[CMat], w: &[CMat]) -> f64 {
    let b = &precoders.budget;
    (0..g.len())
        .map(|i| {
            let e = mse_from_channels(h, &precoders.v, &g[i], b.noise[i], i);
            b.weights[i] * trace(&(&w[i] * e)).re
        })
        .sum()
}

/// `Σ_i α_i (tr(W_i E_i) - ln det W_i)`: the block-wise minimized wMMSE cost.
pub fn wmmse_cost(h: &[CMat], precoders: &PrecoderSet, g: &[CMat], w: &[CMat]) -> Result<f64> {
    let mut total = wmse_objective(h, precoders, g, w);
    for (i, wi) in w.iter().enumerate() {
        let ld = ln_det_hpd(wi).ok_or_else(|| Error::Internal(format!("W_{i} is not positive definite")))?;
        total -= precoders.budget.weights[i] * ld;
    }
    Ok(total)
}

/// Solution of `(K + μ I) V = α B` with the smallest `μ >= 0` meeting
/// `tr(V V^H) <= budget`.
pub(crate) fn regularized_precoder(k_mat: &CMat, rhs: &CMat, alpha: f64, budget: f64) -> Result<(CMat, f64)> {
    let m = k_mat.nrows();
    if rhs.iter().all(|z| *z == Complex64::new(0.0, 0.0)) || alpha == 0.0 {
        return Ok((CMat::zeros(m, rhs.ncols()), 0.0));
    }
    let eig = SymmetricEigen::new(hermitian_part(k_mat));
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let projected = eig.eigenvectors.adjoint() * rhs;
    let rows: Vec<f64> = (0..m)
        .map(|r| projected.row(r).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let scale = lambda.iter().cloned().fold(0.0, f64::max);
    let power = |mu: f64| -> f64 {
        alpha
            * alpha
            * rows
                .iter()
                .zip(&lambda)
                .map(|(r, l)| if *r == 0.0 { 0.0 } else { r / ((l + mu) * (l + mu)) })
                .sum::<f64>()
    };
    let build = |mu: f64| -> CMat {
        let mut scaled = projected.clone();
        for r in 0..m {
            let f = alpha / (lambda[r] + mu);
            scaled.row_mut(r).iter_mut().for_each(|z| *z *= f);
        }
        &eig.eigenvectors * scaled
    };

    let degenerate = lambda
        .iter()
        .zip(&rows)
        .any(|(l, r)| *l <= 1e-14 * scale && *r > 0.0);
    if !degenerate && power(0.0) <= budget {
        return Ok((build(0.0), 0.0));
    }

    let total: f64 = rows.iter().sum();
    let mut hi = alpha * (total / budget).sqrt() * 2f64.powi(-20);
    let mut grow = 0;
    while !(power(hi) < budget) {
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::Convergence {
                what: "precoder multiplier bracket".into(),
                detail: format!("power still {:.6e} >= {budget:.6e} at mu = {hi:.6e}", power(hi)),
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..500 {
        let p_hi = power(hi);
        if (budget - p_hi) / budget <= POWER_REL_TOL {
            return Ok((build(hi), hi));
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        let mid = if mid <= lo || mid >= hi { 0.5 * (lo + hi) } else { mid };
        if power(mid) < budget {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            return Ok((build(hi), hi));
        }
    }
    Err(Error::Convergence {
        what: "precoder multiplier bisection".into(),
        detail: format!("bracket [{lo:.6e}, {hi:.6e}], power {:.6e} vs budget {budget:.6e}", power(hi)),
    })
}

/// One pass of the wMMSE precoder update with the RIS configuration held
/// fixed: all `G_i`, then all `W_i`, then all `V_i`.
pub fn wmmse_precoder_step(state: &mut OptimizerState, bundle: &ChannelBundle) -> Result<()> {
    state.check_dimensions(bundle)?;
    let n = bundle.pairs();
    let h = bundle.all_channels(&state.x);
    let g = mmse_receivers(&h, &state.precoders)?;
    let w = mse_weights(&h, &state.precoders, &g)?;
    let LinkBudget { weights, power, .. } = state.precoders.budget.clone();

    let mut v_new = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for i in 0..n {
        let m = bundle.tx_antennas();
        let mut k_mat = CMat::zeros(m, m);
        for j in 0..n {
            let hji = &h[j * n + i];
            let ghh = g[j].adjoint() * hji;
            k_mat += ghh.adjoint() * &w[j] * ghh * c(weights[j], 0.0);
        }
        let rhs = h[i * n + i].adjoint() * &g[i] * &w[i];
        let (vi, mui) = regularized_precoder(&k_mat, &rhs, weights[i], power[i])?;
        v_new.push(vi);
        mu.push(mui);
    }
    state.g = g;
    state.w = w;
    state.precoders.v = v_new;
    state.mu_tx = mu;
    Ok(())
}
