//! Scenario files: strict JSON with defaults, validation and geometry.
//!
//! Lengths are meters, frequencies hertz, powers dBm, impedances ohms.

use std::path::Path;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::em::{wavelength_of, DipoleGeometry, GroupKind, RadiatorGroup, Termination};
use crate::error::{Error, Result};
use crate::optimizer::{CouplingMode, InitPolicy, LinkBudget, OptimizerOptions};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// A scalar applied to every pair, or one value per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerPair {
    All(f64),
    Each(Vec<f64>),
}

impl PerPair {
    fn expand(&self, n: usize, path: &str) -> Result<Vec<f64>> {
        match self {
            PerPair::All(x) => Ok(vec![*x; n]),
            PerPair::Each(v) if v.len() == n => Ok(v.clone()),
            PerPair::Each(v) => Err(Error::validation(path, format!("expected {n} values, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairPositions {
    pub tx: [f64; 3],
    pub rx: [f64; 3],
}

fn default_antennas() -> usize {
    2
}
fn default_elements() -> usize {
    16
}
fn default_r0() -> f64 {
    0.2
}
fn default_power() -> PerPair {
    PerPair::All(20.0)
}
fn default_noise() -> PerPair {
    PerPair::All(-120.0)
}
fn default_port() -> f64 {
    50.0
}
fn default_seed() -> u64 {
    1
}
fn default_iterations() -> usize {
    500
}
fn default_delta() -> f64 {
    0.01
}
fn default_mode() -> CouplingMode {
    CouplingMode::Mca
}
fn default_true() -> bool {
    true
}

/// Parsed scenario. Optional fields carry the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub frequency_hz: f64,
    pub pairs: Vec<PairPositions>,
    #[serde(default)]
    pub ris_centers: Vec<[f64; 3]>,
    /// Transmit antennas `M`.
    #[serde(default = "default_antennas")]
    pub tx_antennas: usize,
    /// Receive antennas `L`.
    #[serde(default = "default_antennas")]
    pub rx_antennas: usize,
    /// RIS elements `P` per surface, a perfect square.
    #[serde(default = "default_elements")]
    pub ris_elements: usize,
    /// Element spacing in meters; a quarter wavelength when omitted.
    #[serde(default)]
    pub ris_spacing_m: Option<f64>,
    /// Require `P = (λ/d)²`, i.e. a one-wavelength square aperture.
    #[serde(default = "default_true")]
    pub wavelength_aperture: bool,
    #[serde(default = "default_r0")]
    pub r0_ohm: f64,
    #[serde(default = "default_power")]
    pub tx_power_dbm: PerPair,
    #[serde(default = "default_noise")]
    pub noise_dbm: PerPair,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Resistance of every generator and receive load.
    #[serde(default = "default_port")]
    pub port_resistance_ohm: f64,
    #[serde(default)]
    pub nlos: bool,
    #[serde(default = "default_mode")]
    pub mode: CouplingMode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub init: InitPolicy,
}

fn finite3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn vec3(v: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

impl Scenario {
    /// Minimal scenario with every optional field at its default.
    pub fn new(frequency_hz: f64, pairs: Vec<PairPositions>) -> Self {
        let json = serde_json::json!({ "frequency_hz": frequency_hz, "pairs": pairs });
        serde_json::from_value(json).expect("minimal scenario always deserializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn wavelength(&self) -> f64 {
        wavelength_of(self.frequency_hz)
    }

    pub fn ris_spacing(&self) -> f64 {
        self.ris_spacing_m.unwrap_or(self.wavelength() / 4.0)
    }

    pub fn side(&self) -> usize {
        (self.ris_elements as f64).sqrt().round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::validation("frequency_hz", "must be positive and finite"));
        }
        if self.pairs.is_empty() {
            return Err(Error::validation("pairs", "at least one transmitter-receiver pair is required"));
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if !finite3(&p.tx) {
                return Err(Error::validation(format!("pairs[{i}].tx"), "non-finite coordinate"));
            }
            if !finite3(&p.rx) {
                return Err(Error::validation(format!("pairs[{i}].rx"), "non-finite coordinate"));
            }
        }
        for (k, c) in self.ris_centers.iter().enumerate() {
            if !finite3(c) {
                return Err(Error::validation(format!("ris_centers[{k}]"), "non-finite coordinate"));
            }
        }
        if self.tx_antennas == 0 {
            return Err(Error::validation("tx_antennas", "must be >= 1"));
        }
        if self.rx_antennas == 0 {
            return Err(Error::validation("rx_antennas", "must be >= 1"));
        }
        if self.rx_antennas > self.tx_antennas {
            return Err(Error::validation(
                "rx_antennas",
                format!("L <= M violated: L = {} > M = {}", self.rx_antennas, self.tx_antennas),
            ));
        }
        let side = self.side();
        if self.ris_elements == 0 || side * side != self.ris_elements {
            return Err(Error::validation("ris_elements", format!("{} is not a positive perfect square", self.ris_elements)));
        }
        let d = self.ris_spacing();
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::validation("ris_spacing_m", "must be positive and finite"));
        }
        let lambda = self.wavelength();
        if d <= lambda / 32.0 {
            return Err(Error::validation(
                "ris_spacing_m",
                format!("spacing {d} m does not exceed the element length λ/32 = {} m", lambda / 32.0),
            ));
        }
        if self.wavelength_aperture {
            let expected = (lambda / d).powi(2);
            if (expected - self.ris_elements as f64).abs() > 1e-6 * expected {
                return Err(Error::validation(
                    "ris_elements",
                    format!(
                        "P = (λ/d)² required for a one-wavelength aperture: (λ/d)² = {expected:.6}, P = {}",
                        self.ris_elements
                    ),
                ));
            }
        }
        if !(self.r0_ohm >= 0.0 && self.r0_ohm.is_finite()) {
            return Err(Error::validation("r0_ohm", "must be finite and >= 0"));
        }
        if !(self.port_resistance_ohm > 0.0 && self.port_resistance_ohm.is_finite()) {
            return Err(Error::validation("port_resistance_ohm", "must be positive and finite"));
        }
        let n = self.pairs.len();
        for (name, v) in [("tx_power_dbm", self.tx_power_dbm.expand(n, "tx_power_dbm")?), ("noise_dbm", self.noise_dbm.expand(n, "noise_dbm")?)] {
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::validation(format!("{name}[{i}]"), "must be finite"));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != n {
                return Err(Error::validation("weights", format!("expected {n} values, got {}", w.len())));
            }
            if let Some(i) = w.iter().position(|a| !(*a >= 0.0 && a.is_finite())) {
                return Err(Error::validation(format!("weights[{i}]"), "must be finite and >= 0"));
            }
            if !(w.iter().sum::<f64>() > 0.0) {
                return Err(Error::validation("weights", "at least one weight must be positive"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::validation("delta", "must lie in (0, 1)"));
        }
        if let InitPolicy::Random { range } = self.init {
            if !(range >= 0.0 && range.is_finite()) {
                return Err(Error::validation("init.random.range", "must be finite and >= 0"));
            }
        }
        self.radiator_groups().map_err(|e| Error::validation("geometry", e.to_string()))?;
        Ok(())
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        let n = self.pairs.len();
        Ok(LinkBudget {
            weights: self.weights.clone().unwrap_or_else(|| vec![1.0; n]),
            power: self.tx_power_dbm.expand(n, "tx_power_dbm")?.into_iter().map(dbm_to_watts).collect(),
            noise: self.noise_dbm.expand(n, "noise_dbm")?.into_iter().map(dbm_to_watts).collect(),
        })
    }

    pub fn termination(&self) -> Termination {
        let z = Complex64::new(self.port_resistance_ohm, 0.0);
        Termination { generator: z, load: z }
    }

    pub fn optimizer_options(&self, mode: CouplingMode) -> OptimizerOptions {
        OptimizerOptions {
            iterations: self.iterations,
            delta: self.delta,
            seed: self.seed,
            init: self.init,
            mode,
            ..OptimizerOptions::default()
        }
    }

    /// Uniform linear array along `y`, half-wavelength spacing.
    fn array(&self, center: &[f64; 3], count: usize) -> Result<Vec<DipoleGeometry>> {
        let lambda = self.wavelength();
        let spacing = lambda / 2.0;
        (0..count)
            .map(|a| {
                let offset = (a as f64 - (count as f64 - 1.0) / 2.0) * spacing;
                DipoleGeometry::z_directed(vec3(center) + Vector3::new(0.0, offset, 0.0), lambda / 2.0, lambda / 500.0)
            })
            .collect()
    }

    /// Element positions of RIS `k` relative to its center: a square grid
    /// in the `y`-`z` plane.
    pub fn ris_offsets(&self) -> Vec<Vector3<f64>> {
        let side = self.side();
        let d = self.ris_spacing();
        let mid = (side as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(side * side);
        for row in 0..side {
            for col in 0..side {
                out.push(Vector3::new(0.0, (col as f64 - mid) * d, (row as f64 - mid) * d));
            }
        }
        out
    }

    fn ris(&self, center: &[f64; 3]) -> Result<Vec<DipoleGeometry>> {
        let lambda = self.wavelength();
        self.ris_offsets()
            .into_iter()
            .map(|o| DipoleGeometry::z_directed(vec3(center) + o, lambda / 32.0, lambda / 500.0))
            .collect()
    }

    /// Transmitters, then receivers, then RIS surfaces.
    pub fn radiator_groups(&self) -> Result<Vec<RadiatorGroup>> {
        let mut groups = Vec::new();
        for (j, p) in self.pairs.iter().enumerate() {
            groups.push(RadiatorGroup::new(GroupKind::Transmitter, j, self.array(&p.tx, self.tx_antennas)?)?);
        }
        for (i, p) in self.pairs.iter().enumerate() {
            groups.push(RadiatorGroup::new(GroupKind::Receiver, i, self.array(&p.rx, self.rx_antennas)?)?);
        }
        for (k, c) in self.ris_centers.iter().enumerate() {
            groups.push(RadiatorGroup::new(GroupKind::Ris, k, self.ris(c)?)?);
        }
        Ok(groups)
    }

    /// Hex SHA-256 of the canonical serialization, independent of the key
    /// order and optional-field omissions of the source file.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}
