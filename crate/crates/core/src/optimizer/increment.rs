//! Trust-region solve for the imaginary RIS increment.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMat, CVec};

/// Real matrix multiplying `t` in the stationarity condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadraticOperator {
    /// `Re(M_k)`, the one consistent with the finite-difference gradient.
    #[default]
    RealPart,
    /// `Im(M_k)`, the literal operator of the original update formula.
    ImagPart,
}

impl QuadraticOperator {
    pub fn apply(&self, m: &CMat) -> DMatrix<f64> {
        match self {
            QuadraticOperator::RealPart => m.map(|z| z.re),
            QuadraticOperator::ImagPart => m.map(|z| z.im),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSolution {
    /// Imaginary parts `t` of the increment `δ_k = j t`.
    pub t: DVector<f64>,
    pub mu: f64,
    /// True when the norm-constrained fallback replaced the multiplier search.
    pub fallback: bool,
}

const MAX_BISECTIONS: usize = 200;
const GRID_POINTS: usize = 24;
/// Relative accuracy on `‖t‖_∞` for the multiplier search.
const NORM_REL_TOL: f64 = 1e-12;

fn inf_norm(t: &DVector<f64>) -> f64 {
    t.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `(Op(M_k) + μ I) t = Im(u_k)` with `‖t‖_∞ = δ / ‖X_k‖_2`,
/// unless `μ = 0` already lands inside that radius.
pub fn solve_delta(m: &CMat, u: &CVec, delta: f64, x_k: &CMat, op: QuadraticOperator) -> Result<DeltaSolution> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("trust parameter {delta} must lie in (0, 1)")));
    }
    let norm = spectral_norm(x_k);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Domain(format!("‖X_k‖ = {norm} is not a positive finite number")));
    }
    solve_delta_with_radius(m, u, delta / norm, op)
}

enum Evaluator {
    Eigen { vectors: DMatrix<f64>, values: Vec<f64>, projected: DVector<f64> },
    Direct { a: DMatrix<f64>, b: DVector<f64> },
}

impl Evaluator {
    fn solve(&self, mu: f64) -> Option<DVector<f64>> {
        match self {
            Evaluator::Eigen { vectors, values, projected } => {
                let scaled = DVector::from_fn(values.len(), |r, _| projected[r] / (values[r] + mu));
                Some(vectors * scaled)
            }
            Evaluator::Direct { a, b } => {
                let n = a.nrows();
                (a + DMatrix::identity(n, n) * mu).lu().solve(b)
            }
        }
    }
}

/// [`solve_delta`] with the radius on `‖t‖_∞` given directly.
pub fn solve_delta_with_radius(m: &CMat, u: &CVec, radius: f64, op: QuadraticOperator) -> Result<DeltaSolution> {
    let p = u.len();
    if m.shape() != (p, p) {
        return Err(Error::Dimension(format!("{}x{} M_k with a length-{p} u_k", m.nrows(), m.ncols())));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("increment radius {radius} must be positive and finite")));
    }
    let b: DVector<f64> = u.map(|z| z.im);
    if b.iter().all(|x| *x == 0.0) {
        return Ok(DeltaSolution { t: DVector::zeros(p), mu: 0.0, fallback: false });
    }
    let a = op.apply(m);
    let (eval, floor, scale) = match op {
        QuadraticOperator::RealPart => {
            let sym = (&a + a.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
            let lmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let lmax = values.iter().cloned().fold(0.0, |m: f64, x| m.max(x.abs()));
            let projected = eig.eigenvectors.transpose() * &b;
            (Evaluator::Eigen { vectors: eig.eigenvectors, values, projected }, lmin, lmax)
        }
        QuadraticOperator::ImagPart => {
            let lmax = a.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
            (Evaluator::Direct { a: a.clone(), b: b.clone() }, 0.0, lmax)
        }
    };

    // smallest admissible multiplier keeping the regularized operator definite
    let definite_from = (-floor).max(0.0);
    let singular_at_zero = floor <= 1e-12 * scale;
    if !singular_at_zero || op == QuadraticOperator::ImagPart {
        if let Some(t0) = eval.solve(0.0).filter(|t| t.iter().all(|x| x.is_finite())) {
            if inf_norm(&t0) <= radius {
                return Ok(DeltaSolution { t: t0, mu: 0.0, fallback: false });
            }
        }
    }

    let norm_at = |mu: f64| eval.solve(mu).map(|t| inf_norm(&t)).unwrap_or(f64::INFINITY);
    let mut hi = definite_from + b.norm() / radius + scale.max(0.0) * 1e-12 + f64::MIN_POSITIVE;
    let mut grow = 0;
    while !(norm_at(hi) <= radius) {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Convergence {
                what: "RIS multiplier bracket".into(),
                detail: format!("‖t‖_∞ = {:.6e} > radius {radius:.6e} at μ = {hi:.6e}", norm_at(hi)),
            });
        }
    }
    let lo0 = definite_from;

    if op == QuadraticOperator::RealPart && !monotone_on_grid(&norm_at, lo0, hi) {
        let t = box_constrained_qp(&a, &b, radius);
        return Ok(DeltaSolution { t, mu: f64::NAN, fallback: true });
    }

    let mut lo = lo0;
    for _ in 0..MAX_BISECTIONS {
        let n_hi = norm_at(hi);
        if radius - n_hi <= NORM_REL_TOL * radius {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(mid) <= radius {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = eval.solve(hi).ok_or_else(|| Error::Singular {
        what: "regularized increment system".into(),
        cond: f64::INFINITY,
    })?;
    let achieved = inf_norm(&t);
    if (radius - achieved) > 1e-6 * radius {
        return Err(Error::Convergence {
            what: "RIS multiplier bisection".into(),
            detail: format!(
                "bracket [{lo:.6e}, {hi:.6e}] after {MAX_BISECTIONS} steps, ‖t‖_∞ = {achieved:.6e} vs radius {radius:.6e}"
            ),
        });
    }
    Ok(DeltaSolution { t, mu: hi, fallback: false })
}

fn monotone_on_grid(norm_at: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> bool {
    let start = if lo > 0.0 { lo } else { hi * 1e-9 };
    let ratio = (hi / start).powf(1.0 / (GRID_POINTS - 1) as f64);
    let mut prev = f64::INFINITY;
    let mut mu = start;
    for _ in 0..GRID_POINTS {
        let v = norm_at(mu);
        if v > prev * (1.0 + 1e-10) {
            return false;
        }
        prev = v;
        mu *= ratio;
    }
    true
}

/// `min ½ tᵀ A t - bᵀ t` subject to `|t_p| <= radius`, by cyclic coordinate
/// descent on the symmetric part of `A`.
fn box_constrained_qp(a: &DMatrix<f64>, b: &DVector<f64>, radius: f64) -> DVector<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let p = b.len();
    let mut t = DVector::zeros(p);
    let mut grad = -b.clone();
    for _ in 0..10_000 {
        let mut moved = 0.0f64;
        for q in 0..p {
            let h = sym[(q, q)];
            let target = if h > 0.0 {
                t[q] - grad[q] / h
            } else if grad[q] > 0.0 {
                -radius
            } else {
                radius
            };
            let new = target.clamp(-radius, radius);
            let step = new - t[q];
            if step != 0.0 {
                grad += sym.column(q) * step;
                t[q] = new;
                moved = moved.max(step.abs());
            }
        }
        if moved <= 1e-14 * radius {
            break;
        }
    }
    t
}
