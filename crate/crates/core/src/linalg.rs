//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Inverses whose 1-norm condition number exceeds this are rejected.
pub const COND_LIMIT: f64 = 1e12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn diag(v: &[Complex64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(v))
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: &CMat) -> bool {
    m.is_square()
        && m.column_iter()
            .enumerate()
            .all(|(j, col)| col.iter().enumerate().all(|(i, z)| i == j || (z.re == 0.0 && z.im == 0.0)))
}

fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// LU inverse with a 1-norm condition-number guard.
pub fn inverse_guarded(m: &CMat, what: &str) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what}: cannot invert a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    if is_diagonal(m) {
        let d = m.diagonal();
        let big = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let small = d.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let cond = big / small;
        if !(cond <= COND_LIMIT) {
            return Err(Error::Singular {
                what: what.to_string(),
                cond,
            });
        }
        return Ok(CMat::from_diagonal(&d.map(|z| c(1.0, 0.0) / z)));
    }
    let inv = m.clone().lu().try_inverse().filter(all_finite).ok_or_else(|| Error::Singular {
        what: what.to_string(),
        cond: f64::INFINITY,
    })?;
    let cond = norm1(m) * norm1(&inv);
    if !(cond <= COND_LIMIT) {
        return Err(Error::Singular {
            what: what.to_string(),
            cond,
        });
    }
    Ok(inv)
}

/// Solves `a x = b` with partial pivoting and the same condition guard.
pub fn solve_guarded(a: &CMat, b: &CMat, what: &str) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "{what}: {}x{} system with {} right-hand-side rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let inv = inverse_guarded(a, what)?;
    Ok(inv * b)
}

/// Right-solve `x a = b`, i.e. `x = b a^{-1}`.
pub fn right_solve_guarded(b: &CMat, a: &CMat, what: &str) -> Result<CMat> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "{what}: right-solve with {} columns against {}x{}",
            b.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(b * inverse_guarded(a, what)?)
}

/// Largest singular value. Exact SVD for small matrices, power iteration on
/// `m^H m` otherwise.
pub fn spectral_norm(m: &CMat) -> f64 {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return 0.0;
    }
    if is_diagonal(m) {
        return m.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    if m.nrows().min(n) <= 24 {
        return m
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max);
    }
    let mut v = CVec::from_fn(n, |i, _| c(1.0 + 0.01 * (i as f64).sin(), 0.003 * i as f64));
    power_iteration(m, &mut v)
}

/// Spectral norm by power iteration started from `hint`, which is
/// overwritten with the converged right singular vector.
pub fn spectral_norm_warm(m: &CMat, hint: &mut CVec) -> f64 {
    if m.nrows().min(m.ncols()) <= 24 || is_diagonal(m) || hint.len() != m.ncols() || hint.norm() == 0.0 {
        return spectral_norm(m);
    }
    power_iteration(m, hint)
}

const POWER_MAX_ITERATIONS: usize = 1000;
/// Relative change of the `m^H m` Rayleigh estimate that ends the iteration.
const POWER_REL_TOL: f64 = 1e-10;

fn power_iteration(m: &CMat, v: &mut CVec) -> f64 {
    let nv = v.norm();
    *v /= c(nv, 0.0);
    let adj = m.adjoint();
    let mut sigma2 = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = &adj * (m * &*v);
        let lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        *v = w / c(lambda, 0.0);
        if (lambda - sigma2).abs() <= POWER_REL_TOL * lambda {
            sigma2 = lambda;
            break;
        }
        sigma2 = lambda;
    }
    sigma2.sqrt()
}

/// Natural log-determinant of a Hermitian positive definite matrix.
pub fn ln_det_hpd(m: &CMat) -> Option<f64> {
    let chol = hermitian_part(m).cholesky()?;
    let l = chol.l();
    Some((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}
