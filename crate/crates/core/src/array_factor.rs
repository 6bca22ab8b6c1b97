//! Equivalent array factor of an RIS under a given transmit precoder.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::channel::{ChannelBundle, RisConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

/// Where the RIS elements sit and which cone the cut sweeps.
#[derive(Debug, Clone)]
pub struct AfGeometry {
    /// Element positions relative to the RIS center, meters.
    pub positions: Vec<Vector3<f64>>,
    pub wavelength: f64,
    /// Elevation of the cut, radians; zero is the horizontal plane.
    pub elevation: f64,
}

/// Direction `(cos ε cos θ, cos ε sin θ, sin ε)`, with `θ` from the RIS
/// broadside `+x` toward `+y`.
pub fn direction(theta: f64, elevation: f64) -> Vector3<f64> {
    Vector3::new(
        elevation.cos() * theta.cos(),
        elevation.cos() * theta.sin(),
        elevation.sin(),
    )
}

/// Per-element excitation `X_k S_kj V_j` summed over streams.
pub fn excitation(bundle: &ChannelBundle, ris: &RisConfiguration, k: usize, j: usize, v_j: &CMat) -> Result<CVec> {
    let x = bundle.ris_inverse(ris, k)?;
    let s = bundle.ris_out(k, j);
    if v_j.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "precoder with {} rows for {} transmit antennas",
            v_j.nrows(),
            s.ncols()
        )));
    }
    let per_stream = x * s * v_j;
    Ok(CVec::from_fn(per_stream.nrows(), |p, _| per_stream.row(p).iter().sum()))
}

/// `|Σ_p c_p exp(j 2π/λ r_p·û(θ))|` for every `θ`, unnormalized.
pub fn steering_magnitude(c: &CVec, geometry: &AfGeometry, thetas: &[f64]) -> Result<Vec<f64>> {
    if c.len() != geometry.positions.len() {
        return Err(Error::Dimension(format!(
            "{} excitations for {} element positions",
            c.len(),
            geometry.positions.len()
        )));
    }
    if !(geometry.wavelength > 0.0 && geometry.wavelength.is_finite()) {
        return Err(Error::Domain(format!("wavelength {} must be positive", geometry.wavelength)));
    }
    let k0 = 2.0 * std::f64::consts::PI / geometry.wavelength;
    Ok(thetas
        .iter()
        .map(|&theta| {
            let u = direction(theta, geometry.elevation);
            c.iter()
                .zip(&geometry.positions)
                .map(|(cp, r)| cp * Complex64::from_polar(1.0, k0 * r.dot(&u)))
                .sum::<Complex64>()
                .norm()
        })
        .collect())
}

/// Normalizes magnitudes to a 0 dB peak.
pub fn to_db(magnitudes: &[f64]) -> Result<Vec<f64>> {
    let peak = magnitudes.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Domain("array factor vanishes on the whole grid".into()));
    }
    Ok(magnitudes.iter().map(|m| 20.0 * (m / peak).log10()).collect())
}

/// Peak-normalized array factor in dB of RIS `k` illuminated by
/// transmitter `j` with precoder `v_j`.
pub fn array_factor(
    ris: &RisConfiguration,
    bundle: &ChannelBundle,
    k: usize,
    j: usize,
    v_j: &CMat,
    geometry: &AfGeometry,
    thetas: &[f64],
) -> Result<Vec<f64>> {
    if let Some(t) = thetas.iter().find(|t| !(t.abs() <= std::f64::consts::FRAC_PI_2)) {
        return Err(Error::Domain(format!("angle {t} outside [-π/2, π/2]")));
    }
    let c = excitation(bundle, ris, k, j, v_j)?;
    to_db(&steering_magnitude(&c, geometry, thetas)?)
}
