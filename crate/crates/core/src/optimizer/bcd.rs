use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gradient::assemble_gradient;
use super::increment::solve_delta_with_radius;
use super::wmmse::{mmse_receivers, mse_weights, weighted_sum_rate_from_channels, wmmse_cost, wmmse_precoder_step, wmse_objective};
use super::{CouplingMode, InitPolicy, IterationRecord, LinkBudget, OptimizerOptions, OptimizerState, PrecoderSet};
use crate::channel::{mcu_impedance_view, ChannelBundle, RisConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{c, is_diagonal, spectral_norm_warm, CMat};

/// Result of [`bcd_optimize`]. `trace[0]` describes the initial point.
#[derive(Debug, Clone)]
pub struct OptimizationRun {
    pub mode: CouplingMode,
    pub state: OptimizerState,
    pub trace: Vec<IterationRecord>,
}

impl OptimizationRun {
    pub fn final_sum_rate(&self) -> f64 {
        self.trace.last().map(|r| r.sum_rate_bits).unwrap_or(0.0)
    }
}

fn initial_precoders(bundle: &ChannelBundle, xs: &[CMat], budget: &LinkBudget) -> Result<PrecoderSet> {
    let (m, l) = (bundle.tx_antennas(), bundle.rx_antennas());
    if l > m {
        return Err(Error::Domain(format!("L = {l} receive antennas exceed M = {m} transmit antennas")));
    }
    let v = (0..bundle.pairs())
        .map(|i| {
            let h = bundle.channel_with_inverses(xs, i, i);
            let svd = h.clone().svd(false, true);
            let mut dirs = match svd.v_t {
                Some(vt) if h.iter().any(|z| z.norm() > 0.0) => vt.rows(0, l).adjoint(),
                _ => CMat::identity(m, l),
            };
            dirs *= c((budget.power[i] / l as f64).sqrt(), 0.0);
            dirs
        })
        .collect();
    PrecoderSet::new(v, budget.clone())
}

/// Initial reactances and matched precoders for `bundle`.
pub fn initial_state(bundle: &ChannelBundle, budget: &LinkBudget, r0: f64, options: &OptimizerOptions) -> Result<OptimizerState> {
    budget.validate()?;
    if budget.weights.len() != bundle.pairs() {
        return Err(Error::Dimension(format!(
            "link budget for {} pairs, bundle has {}",
            budget.weights.len(),
            bundle.pairs()
        )));
    }
    let (kk, p) = (bundle.ris_count(), bundle.ris_elements());
    let ris = match options.init {
        InitPolicy::Zero => RisConfiguration::zeros(r0, kk, p)?,
        InitPolicy::Random { range } => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            RisConfiguration::random(r0, kk, p, range, &mut rng)?
        }
    };
    let xs = bundle.ris_inverses(&ris)?;
    let precoders = initial_precoders(bundle, &xs, budget)?;
    let mut state = OptimizerState::new(precoders, ris, bundle)?;
    let h = bundle.all_channels(&xs);
    state.g = mmse_receivers(&h, &state.precoders)?;
    state.w = mse_weights(&h, &state.precoders, &state.g)?;
    Ok(state)
}

fn record(
    state: &OptimizerState,
    truth: &ChannelBundle,
    model: &ChannelBundle,
    mode: CouplingMode,
    mu_ris: Vec<f64>,
    delta_norm: Vec<f64>,
) -> Result<IterationRecord> {
    let h_model = model.all_channels(state.inverses());
    let optimizer_rate = weighted_sum_rate_from_channels(&h_model, &state.precoders)?;
    let true_rate = match mode {
        CouplingMode::Mca => optimizer_rate,
        CouplingMode::Mcu => {
            let xs = truth.ris_inverses(state.ris())?;
            weighted_sum_rate_from_channels(&truth.all_channels(&xs), &state.precoders)?
        }
    };
    Ok(IterationRecord {
        iteration: state.iteration,
        sum_rate_bits: true_rate,
        optimizer_sum_rate_bits: optimizer_rate,
        wmse: wmmse_cost(&h_model, &state.precoders, &state.g, &state.w)?,
        mu_tx: state.mu_tx.clone(),
        mu_ris,
        delta_norm,
    })
}

/// One RIS block update; returns `(μ_k, max |t|)` of the accepted step.
fn ris_step(state: &mut OptimizerState, model: &ChannelBundle, k: usize, options: &OptimizerOptions) -> Result<(f64, f64)> {
    if options.verify_cache {
        let residual = state.cache_residual(model);
        if !(residual <= 1e-8) {
            return Err(Error::Internal(format!("inverse cache residual {residual:.3e} exceeds 1e-8")));
        }
    }
    let (m, u) = assemble_gradient(state, model, k)?;
    let norm = spectral_norm_warm(&state.x[k], &mut state.norm_hint[k]);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Internal(format!("‖X_{k}‖ = {norm}")));
    }
    let mut radius = options.delta / norm;
    let h0 = model.all_channels(&state.x);
    let f0 = wmse_objective(&h0, &state.precoders, &state.g, &state.w);

    for _ in 0..=options.max_halvings {
        let sol = solve_delta_with_radius(&m, &u, radius, options.operator)?;
        let step = sol.t.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if step == 0.0 {
            return Ok((sol.mu, 0.0));
        }
        let mut trial = state.ris.clone();
        trial.apply_increment(k, &sol.t)?;
        let h1 = trial_channels(model, &state.x, &trial, k)?;
        let f1 = wmse_objective(&h1, &state.precoders, &state.g, &state.w);
        if f1 <= f0 + options.accept_slack * f0.abs() {
            state.x[k] = model.ris_inverse(&trial, k)?;
            state.ris = trial;
            state.x_source[k] = state.ris.reactance(k).clone();
            return Ok((sol.mu, step));
        }
        radius *= 0.5;
    }
    Ok((0.0, 0.0))
}

/// All `H_ij` with RIS `k` at the `trial` reactances, solving for
/// `X_k S_kj` without forming the inverse.
fn trial_channels(model: &ChannelBundle, xs: &[CMat], trial: &RisConfiguration, k: usize) -> Result<Vec<CMat>> {
    let n = model.pairs();
    let a = model.ris_self(k) + trial.load_matrix(k);
    let singular = || Error::Singular {
        what: format!("trial B̄_{k} + B_{k}"),
        cond: f64::INFINITY,
    };
    let xs_k: Vec<CMat> = if is_diagonal(&a) {
        let d = a.diagonal();
        (0..n)
            .map(|j| {
                let mut y = model.ris_out(k, j).clone();
                for (r, z) in d.iter().enumerate() {
                    y.row_mut(r).iter_mut().for_each(|v| *v /= *z);
                }
                y
            })
            .collect()
    } else {
        let lu = a.lu();
        (0..n)
            .map(|j| lu.solve(model.ris_out(k, j)).ok_or_else(singular))
            .collect::<Result<_>>()?
    };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut h = model.direct(i, j).clone();
            for (m, xm) in xs.iter().enumerate() {
                if m == k {
                    h -= model.ris_in(i, k) * &xs_k[j];
                } else {
                    h -= model.ris_in(i, m) * (xm * model.ris_out(m, j));
                }
            }
            out.push(h);
        }
    }
    if out.iter().any(|h| h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
        return Err(singular());
    }
    Ok(out)
}

/// Alternates wMMSE precoder updates with sequential RIS updates for
/// `options.iterations` rounds. In MCU mode the optimizer works on
/// [`mcu_impedance_view`] while reported rates use `bundle`.
pub fn bcd_optimize(bundle: &ChannelBundle, budget: &LinkBudget, r0: f64, options: &OptimizerOptions) -> Result<OptimizationRun> {
    bcd_optimize_observed(bundle, budget, r0, options, |_| {})
}

/// [`bcd_optimize`] calling `observe` on the state after every round,
/// including the initial one.
pub fn bcd_optimize_observed(
    bundle: &ChannelBundle,
    budget: &LinkBudget,
    r0: f64,
    options: &OptimizerOptions,
    mut observe: impl FnMut(&OptimizerState),
) -> Result<OptimizationRun> {
    options.validate()?;
    let view;
    let model = match options.mode {
        CouplingMode::Mca => bundle,
        CouplingMode::Mcu => {
            view = mcu_impedance_view(bundle);
            &view
        }
    };
    let kk = bundle.ris_count();
    let mut state = initial_state(model, budget, r0, options)?;
    let mut trace = vec![record(&state, bundle, model, options.mode, vec![0.0; kk], vec![0.0; kk])?];
    observe(&state);

    let mut drops = 0;
    for q in 1..=options.iterations {
        wmmse_precoder_step(&mut state, model)?;
        let mut mu_ris = Vec::with_capacity(kk);
        let mut delta_norm = Vec::with_capacity(kk);
        for k in 0..kk {
            let (mu, step) = ris_step(&mut state, model, k, options)?;
            mu_ris.push(mu);
            delta_norm.push(step);
        }
        state.iteration = q;
        let row = record(&state, bundle, model, options.mode, mu_ris, delta_norm)?;
        let prev = trace.last().map(|r| r.optimizer_sum_rate_bits).unwrap_or(f64::NEG_INFINITY);
        drops = if row.optimizer_sum_rate_bits < prev - options.divergence_tol { drops + 1 } else { 0 };
        trace.push(row);
        observe(&state);
        if drops >= options.divergence_window {
            return Err(Error::Diverged { iteration: q, trace });
        }
    }
    Ok(OptimizationRun {
        mode: options.mode,
        state,
        trace,
    })
}
