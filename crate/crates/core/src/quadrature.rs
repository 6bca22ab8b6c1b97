//! Adaptive Gauss–Legendre quadrature for smooth complex integrands.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

/// Panel rule order.
pub const PANEL_ORDER: usize = 129;
const CHECK_ORDER: usize = 64;
const MAX_DEPTH: usize = 40;
const MAX_PANELS: usize = 20_000;

pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn panel_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn check_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(CHECK_ORDER))
}

pub fn apply_rule<F: Fn(f64) -> Complex64>(rule: &Rule, f: &F, a: f64, b: f64) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

/// One-pass estimate of `∫|f|` over the panels delimited by `points`.
pub fn l1_estimate<F: Fn(f64) -> Complex64>(f: &F, points: &[f64]) -> f64 {
    points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| apply_rule(panel_rule(), &|x| Complex64::new(f(x).norm(), 0.0), w[0], w[1]).re)
        .sum()
}

/// Integrates `f` over `[points[0], points.last()]`, starting from panels
/// split at every interior point. A panel is accepted when the 129-point and
/// 64-point estimates agree to `rel_tol` relative to the panel value, or to
/// `rel_tol ∫|f|` scaled by panel width; otherwise it is bisected.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, points: &[f64], rel_tol: f64) -> Complex64 {
    let floor = rel_tol * l1_estimate(&f, points);
    integrate_with_floor(f, points, rel_tol, floor)
}

/// [`integrate`] with an explicit absolute error budget `abs_tol` for the
/// whole interval.
pub fn integrate_with_floor<F: Fn(f64) -> Complex64>(f: F, points: &[f64], rel_tol: f64, abs_tol: f64) -> Complex64 {
    assert!(points.len() >= 2, "need at least one panel");
    let total_len = points[points.len() - 1] - points[0];
    if total_len == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let fine = panel_rule();
    let coarse = check_rule();

    let mut stack: Vec<(f64, f64, Complex64, usize)> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], apply_rule(fine, &f, w[0], w[1]), 0))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut panels = 0usize;
    while let Some((a, b, est, depth)) = stack.pop() {
        panels += 1;
        let check = apply_rule(coarse, &f, a, b);
        let err = (est - check).norm();
        let local = abs_tol * (b - a) / total_len;
        if err <= rel_tol * est.norm() || err <= local || depth >= MAX_DEPTH || panels >= MAX_PANELS {
            total += est;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, apply_rule(fine, &f, a, m), depth + 1));
            stack.push((m, b, apply_rule(fine, &f, m, b), depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_weights_sum_to_two() {
        for n in [1, 2, 5, 64, 129] {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn integrates_polynomial_exactly() {
        let r = gauss_legendre(5);
        // degree 9 is exact for 5 points
        let v = apply_rule(&r, &|x: f64| Complex64::new(x.powi(8), 0.0), -1.0, 1.0);
        assert!((v.re - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_near_singular_peak() {
        let a = 1e-3;
        let f = |x: f64| Complex64::new(1.0 / (x * x + a * a).sqrt(), 0.0);
        let exact = 2.0 * (1.0 / a + (1.0 / (a * a) + 1.0).sqrt()).ln();
        let v = integrate(f, &[-1.0, 0.0, 1.0], 1e-10);
        assert!((v.re - exact).abs() < 1e-9 * exact);
    }
}
