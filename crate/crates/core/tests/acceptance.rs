//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line to stderr
//! (visible without `--nocapture`); the test fails if any criterion fails.

mod common;

use std::io::Write;

use common::*;
use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rand::Rng;

use ris_sumrate::array_factor::{excitation, steering_magnitude, AfGeometry};
use ris_sumrate::channel::{channel_exact, channel_farfield_single};
use ris_sumrate::em::{dipole_mutual_impedance, DipoleGeometry, GroupKind};
use ris_sumrate::harness::{angles_toward, build_model, theta_grid, Model};
use ris_sumrate::linalg::{spectral_norm, CMat, CVec};
use ris_sumrate::optimizer::*;
use ris_sumrate::scenario::{load_scenario, Scenario};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(o: &Outcome) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "ACCEPTANCE {:<28} {}  {}", o.name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn reference() -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.json");
    load_scenario(&path).unwrap()
}

fn with_spacing(mut s: Scenario, side: usize) -> Scenario {
    s.ris_elements = side * side;
    s.ris_spacing_m = Some(s.wavelength() / side as f64);
    s
}

/// Records every constraint violation seen by the observers.
#[derive(Default)]
struct ConstraintLog {
    rounds: usize,
    worst_resistance: f64,
    worst_power: f64,
}

impl ConstraintLog {
    fn pass(&self) -> bool {
        self.worst_resistance <= 1e-12 && self.worst_power <= 1e-9
    }
}

fn run_observed(s: &Scenario, model: &Model, mode: CouplingMode, log: &mut ConstraintLog) -> OptimizationRun {
    let r0 = s.r0_ohm;
    let budget = s.link_budget().unwrap();
    bcd_optimize_observed(&model.bundle, &budget, r0, &s.optimizer_options(mode), |state| {
        log.rounds += 1;
        for k in 0..state.ris().ris_count() {
            for b in state.ris().tunable(k).iter() {
                log.worst_resistance = log.worst_resistance.max((b.re - r0).abs());
            }
        }
        for i in 0..state.precoders.v.len() {
            let excess = state.precoders.power(i) / state.precoders.budget.power[i] - 1.0;
            log.worst_power = log.worst_power.max(excess);
        }
    })
    .unwrap()
}

// ---------- property criteria ----------

fn gradient_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut seed = 0;
    for n in [1, 2] {
        for l in [1, 2, 3] {
            for kk in [1, 2] {
                for p in [1, 4, 16] {
                    for _ in 0..2 {
                        seed += 1;
                        let inst = random_instance(1000 + seed, n, l, kk, p);
                        for k in 0..kk {
                            let (m, u) = assemble_gradient(&inst.state, &inst.bundle, k).unwrap();
                            let zero = DVector::zeros(p);
                            let step = 1e-6 / spectral_norm(&inst.state.inverses()[k]);
                            let fd = fd_gradient(|t| objective_exact(&inst, k, t), &zero, step);
                            let analytic = QuadraticOperator::RealPart.apply(&m) * &zero * 2.0 - u.map(|z| z.im) * 2.0;
                            worst = worst.max(rel_err(&analytic, &fd));
                        }
                        count += 1;
                    }
                }
            }
        }
    }
    Outcome {
        name: "gradient-oracle",
        pass: count >= 50 && worst <= 1e-5,
        detail: format!("{count} instances, worst relative error {worst:.2e} (tol 1e-5)"),
    }
}

fn mapping_identity() -> Outcome {
    let mut g = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (l, p, cols) = (g.random_range(1..5), g.random_range(1..17), g.random_range(1..5));
        let q1 = random_cmat(&mut g, l, p);
        let q2 = random_cmat(&mut g, p, cols);
        let d = random_cvec(&mut g, p);
        let lhs = &q1 * CMat::from_diagonal(&d) * &q2;
        let rhs = q_mapping(&q1, &q2).unwrap() * gamma_stack(&d, cols);
        worst = worst.max((&lhs - &rhs).norm() / lhs.norm());
    }
    Outcome { name: "mapping-identity", pass: worst <= 1e-13, detail: format!("100 instances, worst {worst:.2e} (tol 1e-13)") }
}

fn neumann_order() -> Outcome {
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let inst = random_instance(2000 + seed, 1, 1, 1, 16);
        let x = &inst.state.inverses()[0];
        let a = inst.bundle.ris_self(0) + inst.state.ris().load_matrix(0);
        let mut g = rng(seed);
        let dir = CVec::from_fn(16, |_, _| Complex64::new(0.0, g.random_range(-1.0..1.0)));
        let err = |s: f64| {
            let d = &dir * Complex64::new(s, 0.0);
            let exact = (&a + CMat::from_diagonal(&d)).try_inverse().unwrap();
            (neumann_apply(x, &d).unwrap() - exact).norm()
        };
        ratios.push(err(0.02) / err(0.01));
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    Outcome {
        name: "neumann-order",
        pass: lo >= 3.5 && hi <= 4.5,
        detail: format!("10 instances, halving ratios in [{lo:.3}, {hi:.3}] (target [3.5, 4.5])"),
    }
}

fn duality() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let inst = random_instance(3000 + seed, 2, 1 + (seed as usize % 3), 1, 4);
        let h = inst.bundle.all_channels(inst.state.inverses());
        let g = mmse_receivers(&h, &inst.state.precoders).unwrap();
        for i in 0..2 {
            let e = mse_from_channels(&h, &inst.state.precoders.v, &g[i], 0.1, i);
            let via_mse = -e.determinant().re.log2();
            let r = rate_from_channels(&h, &inst.state.precoders.v, 0.1, i).unwrap();
            worst = worst.max((r - via_mse).abs() / r.abs());
        }
    }
    Outcome { name: "rate-mse-duality", pass: worst <= 1e-8, detail: format!("50 instances, worst {worst:.2e} (tol 1e-8)") }
}

// ---------- physics criteria ----------

/// `∫_0^x g(t) dt` by composite Simpson.
fn simpson(g: impl Fn(f64) -> f64, x: f64, n: usize) -> f64 {
    let h = x / n as f64;
    let mut s = g(0.0) + g(x);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn impedance_sanity(model: &Model, s: &Scenario) -> Outcome {
    // Thin-wire closed form for a half-wave dipole: 30 Cin(2π) + j 30 Si(2π).
    let two_pi = 2.0 * std::f64::consts::PI;
    let cin = simpson(|t| if t == 0.0 { 0.0 } else { (1.0 - t.cos()) / t }, two_pi, 100_000);
    let si = simpson(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, two_pi, 100_000);
    let oracle = Complex64::new(30.0 * cin, 30.0 * si);
    let lambda = s.wavelength();
    let d = DipoleGeometry::z_directed(Vector3::zeros(), lambda / 2.0, lambda / 500.0).unwrap();
    let z = dipole_mutual_impedance(&d, &d, lambda).unwrap();
    let dev_oracle = (z - oracle).norm() / oracle.norm();
    let nominal = Complex64::new(73.0, 42.0);
    let dev_nominal = (z - nominal).norm() / nominal.norm();

    // Reciprocity: recompute every transposed block from element-level calls.
    let groups = s.radiator_groups().unwrap();
    let imp = &model.impedance;
    let position = |kind: GroupKind, id: usize| match kind {
        GroupKind::Transmitter => imp.tx(id),
        GroupKind::Receiver => imp.rx(id),
        GroupKind::Ris => imp.ris(id),
    };
    let mut worst: f64 = 0.0;
    for gx in &groups {
        for gy in &groups {
            let zxy = imp.block(position(gx.kind, gx.id), position(gy.kind, gy.id));
            for (p, dp) in gx.dipoles.iter().enumerate() {
                for (q, dq) in gy.dipoles.iter().enumerate() {
                    let zyx = dipole_mutual_impedance(dq, dp, lambda).unwrap();
                    let a = zxy[(p, q)];
                    worst = worst.max((a - zyx).norm() / a.norm().max(zyx.norm()));
                }
            }
        }
    }
    Outcome {
        name: "impedance-sanity",
        pass: dev_oracle <= 0.05 && dev_nominal <= 0.05 && worst <= 1e-9,
        detail: format!(
            "Z = {:.3}{:+.3}j ohm, closed form {:.3}{:+.3}j ({:.2}% off), {:.2}% off 73+42j; reciprocity {worst:.1e}",
            z.re,
            z.im,
            oracle.re,
            oracle.im,
            100.0 * dev_oracle,
            100.0 * dev_nominal
        ),
    }
}

fn far_field(model: &Model, ris: &ris_sumrate::channel::RisConfiguration) -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let exact = channel_exact(&model.impedance, ris, i, j, k).unwrap();
                let approx = channel_farfield_single(&model.impedance, ris, i, j, k).unwrap();
                worst = worst.max(rel_err_c(&approx, &exact));
            }
        }
    }
    Outcome { name: "far-field", pass: worst <= 1e-3, detail: format!("worst over (i,j,k): {worst:.2e} (tol 1e-3)") }
}

// ---------- optimization criteria ----------

fn monotone(run: &OptimizationRun, delta: f64) -> Outcome {
    let mut worst_rate: f64 = 0.0;
    let mut worst_wmse: f64 = 0.0;
    let mut ok = true;
    for w in run.trace.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let drop = a.sum_rate_bits - b.sum_rate_bits;
        worst_rate = worst_rate.max(drop);
        ok &= drop <= 1e-6 + delta * delta * a.sum_rate_bits.abs();
        let rise = b.wmse - a.wmse;
        worst_wmse = worst_wmse.max(rise);
        ok &= rise <= 1e-9 * a.wmse.abs().max(1.0) + delta * delta * a.wmse.abs();
    }
    Outcome {
        name: "monotone-convergence",
        pass: ok,
        detail: format!(
            "Q = {}, rate {:.6e} -> {:.6e} bits, largest rate drop {worst_rate:.2e}, largest wMSE rise {worst_wmse:.2e}",
            run.trace.len() - 1,
            run.trace[0].sum_rate_bits,
            run.final_sum_rate()
        ),
    }
}

fn array_factor_null(s: &Scenario, model: &Model, run: &OptimizationRun) -> Outcome {
    let ris_index = 1;
    let c = s.ris_centers[ris_index];
    let center = Vector3::new(c[0], c[1], c[2]);
    // link 2 reaches the second surface and interferes at receiver 1
    let (j, victim) = (1, 0);
    let r = s.pairs[victim].rx;
    let (theta_v, elevation) = angles_toward(&center, &Vector3::new(r[0], r[1], r[2]));
    let geometry = AfGeometry { positions: s.ris_offsets(), wavelength: s.wavelength(), elevation };
    let exc = excitation(&model.bundle, run.state.ris(), ris_index, j, &run.state.precoders.v[j]).unwrap();
    let grid = theta_grid(721);
    let mags = steering_magnitude(&exc, &geometry, &grid).unwrap();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let at = steering_magnitude(&exc, &geometry, &[theta_v]).unwrap()[0];
    let db = 20.0 * (at / peak).log10();
    Outcome {
        name: "af-null",
        pass: db <= -10.0,
        detail: format!("P = {}, AF toward receiver 1 at {:.1} deg: {db:.2} dB below peak (need >= 10)", s.ris_elements, theta_v.to_degrees()),
    }
}

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();
    let mut push = |o: Outcome| {
        report(&o);
        outcomes.push(o);
    };
    push(gradient_oracle());
    push(mapping_identity());
    push(neumann_order());
    push(duality());

    let mut constraints = ConstraintLog::default();
    let base = reference();
    let model = build_model(&base).unwrap();
    push(impedance_sanity(&model, &base));

    let mca = run_observed(&base, &model, CouplingMode::Mca, &mut constraints);
    push(monotone(&mca, base.delta));
    push(far_field(&model, mca.state.ris()));

    let eighth = with_spacing(reference(), 8);
    let model8 = build_model(&eighth).unwrap();
    let a = run_observed(&eighth, &model8, CouplingMode::Mca, &mut constraints);
    let u = run_observed(&eighth, &model8, CouplingMode::Mcu, &mut constraints);
    push(Outcome {
        name: "coupling-ordering",
        pass: a.final_sum_rate() >= u.final_sum_rate(),
        detail: format!(
            "d = λ/8, P = 64, Q = {}: MCA {:.6e} vs MCU {:.6e} bits (MCU optimizer view {:.6e})",
            eighth.iterations,
            a.final_sum_rate(),
            u.final_sum_rate(),
            u.trace.last().unwrap().optimizer_sum_rate_bits
        ),
    });

    let mut rates = Vec::new();
    for l in 1..=3 {
        let mut s = reference();
        s.tx_antennas = l;
        s.rx_antennas = l;
        let m = build_model(&s).unwrap();
        rates.push(run_observed(&s, &m, CouplingMode::Mca, &mut constraints).final_sum_rate());
    }
    push(Outcome {
        name: "antenna-trend",
        pass: rates.windows(2).all(|w| w[1] >= w[0]),
        detail: format!("MCA final rate for L = 1, 2, 3: {:.6e}, {:.6e}, {:.6e} bits", rates[0], rates[1], rates[2]),
    });

    let sixteenth = with_spacing(reference(), 16);
    let model16 = build_model(&sixteenth).unwrap();
    let af_run = run_observed(&sixteenth, &model16, CouplingMode::Mca, &mut constraints);
    push(array_factor_null(&sixteenth, &model16, &af_run));

    push(Outcome {
        name: "constraint-preservation",
        pass: constraints.pass(),
        detail: format!(
            "{} observed rounds, worst |Re b - R0| {:.1e}, worst relative power excess {:.1e}",
            constraints.rounds, constraints.worst_resistance, constraints.worst_power
        ),
    });

    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
