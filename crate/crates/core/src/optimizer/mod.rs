//! Weighted sum-rate maximization: wMMSE precoding alternated with
//! block-coordinate updates of the RIS reactances.

mod bcd;
mod gradient;
mod increment;
mod neumann;
mod wmmse;

pub use bcd::{bcd_optimize, bcd_optimize_observed, initial_state, OptimizationRun};
pub use gradient::{
    assemble_gradient, assemble_gradient_via_mapping, build_blocks, gamma_stack, q_mapping, GradientBlocks,
};
pub use increment::{solve_delta, solve_delta_with_radius, DeltaSolution, QuadraticOperator};
pub use neumann::neumann_apply;
pub use wmmse::{
    mmse_receivers, mse_from_channels, mse_matrix, mse_weights, rate, rate_from_channels, weighted_sum_rate,
    weighted_sum_rate_from_channels, wmmse_cost, wmmse_precoder_step, wmse_objective, POWER_REL_TOL,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelBundle, RisConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMat, CVec};

/// Per-pair weights, transmit budgets and receiver noise, all in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub weights: Vec<f64>,
    pub power: Vec<f64>,
    pub noise: Vec<f64>,
}

impl LinkBudget {
    pub fn uniform(pairs: usize, power: f64, noise: f64) -> Self {
        LinkBudget {
            weights: vec![1.0; pairs],
            power: vec![power; pairs],
            noise: vec![noise; pairs],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if self.power.len() != n || self.noise.len() != n {
            return Err(Error::Dimension(format!(
                "{} weights, {} budgets, {} noise powers",
                n,
                self.power.len(),
                self.noise.len()
            )));
        }
        if self.weights.iter().any(|a| !(*a >= 0.0 && a.is_finite())) || !(self.weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::Domain("weights must be finite, >= 0 and not all zero".into()));
        }
        if self.power.iter().chain(&self.noise).any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Domain("power budgets and noise powers must be finite and > 0".into()));
        }
        Ok(())
    }
}

/// Precoders `V_i` (M x L) with their link budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub v: Vec<CMat>,
    pub budget: LinkBudget,
}

impl PrecoderSet {
    pub fn new(v: Vec<CMat>, budget: LinkBudget) -> Result<Self> {
        if v.len() != budget.weights.len() {
            return Err(Error::Dimension(format!(
                "{} precoders for {} pairs",
                v.len(),
                budget.weights.len()
            )));
        }
        Ok(PrecoderSet { v, budget })
    }

    /// `tr(V_i V_i^H)`.
    pub fn power(&self, i: usize) -> f64 {
        frobenius(&self.v[i]).powi(2)
    }

    pub fn within_budget(&self, rel_slack: f64) -> bool {
        (0..self.v.len()).all(|i| self.power(i) <= self.budget.power[i] * (1.0 + rel_slack))
    }
}

/// Mutual-coupling-aware or -unaware design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    Mca,
    Mcu,
}

impl CouplingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingMode::Mca => "mca",
            CouplingMode::Mcu => "mcu",
        }
    }
}

/// Starting RIS reactances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// Uniform on `[-range, range]` ohms from a seeded generator.
    Random { range: f64 },
    Zero,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::Random { range: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub iterations: usize,
    pub delta: f64,
    pub seed: u64,
    pub init: InitPolicy,
    pub mode: CouplingMode,
    pub operator: QuadraticOperator,
    /// Radius halvings tried before a RIS step is skipped.
    pub max_halvings: usize,
    /// Relative slack on the wMSE increase accepted for a RIS step.
    pub accept_slack: f64,
    pub divergence_tol: f64,
    pub divergence_window: usize,
    /// Re-derive every cached `X_k` from scratch before each gradient.
    pub verify_cache: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            iterations: 500,
            delta: 0.01,
            seed: 1,
            init: InitPolicy::default(),
            mode: CouplingMode::Mca,
            operator: QuadraticOperator::RealPart,
            max_halvings: 30,
            accept_slack: 1e-12,
            divergence_tol: 1e-3,
            divergence_window: 10,
            verify_cache: false,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!("trust parameter delta = {} must lie in (0, 1)", self.delta)));
        }
        if let InitPolicy::Random { range } = self.init {
            if !(range >= 0.0 && range.is_finite()) {
                return Err(Error::Domain(format!("initial reactance range {range} must be finite and >= 0")));
            }
        }
        if self.divergence_window == 0 {
            return Err(Error::Domain("divergence window must be >= 1".into()));
        }
        Ok(())
    }
}

/// One trace row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Weighted sum-rate on the true coupled model, bits per channel use.
    pub sum_rate_bits: f64,
    /// Weighted sum-rate on the model the optimizer sees.
    pub optimizer_sum_rate_bits: f64,
    /// `Σ_i α_i (tr(W_i E_i) - ln det W_i)` on the optimizer's model.
    pub wmse: f64,
    pub mu_tx: Vec<f64>,
    pub mu_ris: Vec<f64>,
    /// `max_p |Im δ_{k,p}|` of the accepted increment per RIS.
    pub delta_norm: Vec<f64>,
}

/// Mutable iterate of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub precoders: PrecoderSet,
    pub g: Vec<CMat>,
    pub w: Vec<CMat>,
    pub mu_tx: Vec<f64>,
    pub iteration: usize,
    ris: RisConfiguration,
    x: Vec<CMat>,
    /// Reactances the cached inverses were computed from.
    x_source: Vec<DVector<f64>>,
    /// Warm starts for the spectral norm of each `X_k`.
    norm_hint: Vec<CVec>,
}

impl OptimizerState {
    pub fn new(precoders: PrecoderSet, ris: RisConfiguration, bundle: &ChannelBundle) -> Result<Self> {
        precoders.budget.validate()?;
        let x = bundle.ris_inverses(&ris)?;
        let n = bundle.pairs();
        let l = bundle.rx_antennas();
        let p = bundle.ris_elements();
        let state = OptimizerState {
            g: vec![CMat::zeros(l, l); n],
            w: vec![CMat::identity(l, l); n],
            mu_tx: vec![0.0; n],
            iteration: 0,
            x_source: (0..ris.ris_count()).map(|k| ris.reactance(k).clone()).collect(),
            norm_hint: vec![CVec::from_element(p, crate::linalg::c(1.0, 0.0)); ris.ris_count()],
            precoders,
            ris,
            x,
        };
        state.check_dimensions(bundle)?;
        Ok(state)
    }

    pub fn ris(&self) -> &RisConfiguration {
        &self.ris
    }

    /// Cached `X_k = (B̄_k + B_k)^-1`.
    pub fn inverses(&self) -> &[CMat] {
        &self.x
    }

    /// Replaces the RIS configuration and recomputes every inverse exactly.
    pub fn set_ris(&mut self, ris: RisConfiguration, bundle: &ChannelBundle) -> Result<()> {
        self.x = bundle.ris_inverses(&ris)?;
        self.x_source = (0..ris.ris_count()).map(|k| ris.reactance(k).clone()).collect();
        self.ris = ris;
        Ok(())
    }

    /// Fails if a cached inverse was computed for different reactances.
    pub fn check_cache(&self) -> Result<()> {
        for k in 0..self.x.len() {
            if &self.x_source[k] != self.ris.reactance(k) {
                return Err(Error::Internal(format!("stale inverse cache for RIS {k}")));
            }
        }
        Ok(())
    }

    /// Largest relative residual `‖X_k (B̄_k + B_k) - I‖_F / √P` over all `k`.
    pub fn cache_residual(&self, bundle: &ChannelBundle) -> f64 {
        (0..self.x.len())
            .map(|k| {
                let a = bundle.ris_self(k) + self.ris.load_matrix(k);
                let p = a.nrows();
                frobenius(&(&self.x[k] * a - CMat::identity(p, p))) / (p as f64).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn check_dimensions(&self, bundle: &ChannelBundle) -> Result<()> {
        let n = bundle.pairs();
        let (m, l) = (bundle.tx_antennas(), bundle.rx_antennas());
        bundle.check_configuration(&self.ris)?;
        let bad = self.precoders.v.len() != n
            || self.g.len() != n
            || self.w.len() != n
            || self.precoders.v.iter().any(|v| v.shape() != (m, l))
            || self.g.iter().any(|g| g.shape() != (l, l))
            || self.w.iter().any(|w| w.shape() != (l, l))
            || self.x.len() != bundle.ris_count();
        if bad {
            return Err(Error::Dimension(format!(
                "optimizer state does not match a bundle with {n} pairs, M = {m}, L = {l}"
            )));
        }
        Ok(())
    }
}
