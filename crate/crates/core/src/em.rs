//! Mutual and self impedances of thin perfectly conducting wire dipoles.
//!
//! Each dipole carries the sinusoidal current `I(s) = sin(k (h - |s|))` along
//! its axis, `h` being the half length. Impedances are referenced to the
//! terminal currents `I(0)` (induced-EMF method). Parallel dipoles use the
//! closed-form near field of a sinusoidal filament integrated along the second
//! wire; arbitrarily oriented pairs fall back to the mixed-potential double
//! integral. The self term is evaluated on the wire surface (offset = radius).

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::quadrature;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Free-space wave impedance, ohms.
pub const ETA_0: f64 = MU_0 * SPEED_OF_LIGHT;

/// Relative tolerance of the adaptive coupling integrals.
pub const QUADRATURE_REL_TOL: f64 = 1e-8;

pub fn wavelength_of(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleGeometry {
    /// Wire midpoint, meters.
    pub center: Vector3<f64>,
    /// Full tip-to-tip length, meters.
    pub length: f64,
    pub radius: f64,
    /// Unit vector along the wire.
    pub axis: Vector3<f64>,
}

impl DipoleGeometry {
    pub fn new(center: Vector3<f64>, length: f64, radius: f64, axis: Vector3<f64>) -> Result<Self> {
        let d = DipoleGeometry {
            center,
            length,
            radius,
            axis,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn z_directed(center: Vector3<f64>, length: f64, radius: f64) -> Result<Self> {
        Self::new(center, length, radius, Vector3::z())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|x| x.is_finite()) {
            return Err(Error::Geometry("dipole center is not finite".into()));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Geometry(format!("dipole length {} must be > 0", self.length)));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Geometry(format!("dipole radius {} must be > 0", self.radius)));
        }
        if self.radius >= self.length / 10.0 {
            return Err(Error::Geometry(format!(
                "thin-wire assumption violated: radius {} >= length/10 ({})",
                self.radius,
                self.length / 10.0
            )));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Geometry(format!(
                "dipole axis has norm {}, expected 1",
                self.axis.norm()
            )));
        }
        Ok(())
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.length
    }

    fn sort_key(&self) -> [f64; 8] {
        [
            self.center.x,
            self.center.y,
            self.center.z,
            self.length,
            self.radius,
            self.axis.x,
            self.axis.y,
            self.axis.z,
        ]
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .iter()
            .zip(other.sort_key().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }
}

/// Mutual impedance `Z_12` (ohms) between two thin-wire dipoles, or the self
/// impedance when both arguments describe the same wire.
///
/// The pair is put in a canonical order before integrating, so swapping the
/// arguments returns a bitwise identical value.
pub fn dipole_mutual_impedance(
    d1: &DipoleGeometry,
    d2: &DipoleGeometry,
    wavelength: f64,
) -> Result<Complex64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::Domain(format!("wavelength {wavelength} must be > 0")));
    }
    d1.validate()?;
    d2.validate()?;
    let (a, b) = if d1.canonical_cmp(d2) == Ordering::Greater {
        (d2, d1)
    } else {
        (d1, d2)
    };
    let k = 2.0 * PI / wavelength;
    let cos_axes = a.axis.dot(&b.axis);

    if a == b {
        return Ok(parallel_coupling(k, a.half_length(), b.half_length(), 0.0, a.radius, 1.0));
    }
    if (cos_axes.abs() - 1.0).abs() <= 1e-12 {
        let delta = b.center - a.center;
        let z0 = delta.dot(&a.axis);
        let rho = (delta - a.axis * z0).norm();
        let (h1, h2) = (a.half_length(), b.half_length());
        let overlap_axially = z0 - h2 < h1 && z0 + h2 > -h1;
        if rho < a.radius + b.radius && overlap_axially {
            return Err(Error::Geometry(format!(
                "distinct parallel wires overlap (lateral distance {rho:.3e} m, radii {:.3e}/{:.3e} m)",
                a.radius, b.radius
            )));
        }
        return Ok(parallel_coupling(k, h1, h2, z0, rho, cos_axes.signum()));
    }

    let gap = segment_distance(a, b);
    if gap < a.radius + b.radius {
        return Err(Error::Geometry(format!(
            "wires intersect or touch (closest approach {gap:.3e} m)"
        )));
    }
    Ok(double_integral_coupling(a, b, k))
}

/// Induced-EMF coupling of parallel wires. Wire 2 is displaced by `z0` along
/// the common axis and `rho` across it; `sigma = ±1` flips its orientation.
fn parallel_coupling(k: f64, h1: f64, h2: f64, z0: f64, rho: f64, sigma: f64) -> Complex64 {
    let green = |r: f64| Complex64::from_polar(1.0 / r, -k * r);
    let cos_kh1 = (k * h1).cos();
    let field = |s: f64| {
        let z = z0 + sigma * s;
        let r1 = (rho * rho + (z - h1) * (z - h1)).sqrt();
        let r2 = (rho * rho + (z + h1) * (z + h1)).sqrt();
        let r0 = (rho * rho + z * z).sqrt();
        let bracket = green(r1) + green(r2) - green(r0) * (2.0 * cos_kh1);
        bracket * (k * (h2 - s.abs())).sin()
    };

    let mut points = vec![-h2, 0.0, h2];
    for z in [h1, -h1, 0.0] {
        let s = sigma * (z - z0);
        if s > -h2 && s < h2 {
            points.push(s);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let integral = quadrature::integrate(field, &points, QUADRATURE_REL_TOL);
    let scale = ETA_0 * sigma / (4.0 * PI * (k * h1).sin() * (k * h2).sin());
    c(0.0, scale) * integral
}

/// Mixed-potential form for arbitrarily oriented wires:
/// `Z = j k eta / (4 pi I1(0) I2(0)) ∫∫ [(s1·s2) I1 I2 - I1' I2' / k^2] e^{-jkR}/R`.
pub fn double_integral_coupling(a: &DipoleGeometry, b: &DipoleGeometry, k: f64) -> Complex64 {
    let (h1, h2) = (a.half_length(), b.half_length());
    let dot = a.axis.dot(&b.axis);
    let current = |h: f64, s: f64| (k * (h - s.abs())).sin();
    let slope = |h: f64, s: f64| -k * s.signum() * (k * (h - s.abs())).cos();

    let outer = |s2: f64| {
        let p2 = b.center + b.axis * s2;
        let i2 = current(h2, s2);
        let di2 = slope(h2, s2);
        let inner = |s1: f64| {
            let r = (a.center + a.axis * s1 - p2).norm();
            let kernel = Complex64::from_polar(1.0 / r, -k * r);
            kernel * (dot * current(h1, s1) * i2 - slope(h1, s1) * di2 / (k * k))
        };
        let foot = (p2 - a.center).dot(&a.axis);
        let mut pts = vec![-h1, 0.0, h1];
        if foot > -h1 && foot < h1 {
            pts.push(foot);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        quadrature::integrate(inner, &pts, QUADRATURE_REL_TOL)
    };
    let outer_points = [-h2, 0.0, h2];
    let magnitude = quadrature::l1_estimate(
        &|s2: f64| {
            let p2 = b.center + b.axis * s2;
            let (i2, di2) = (current(h2, s2), slope(h2, s2));
            let abs_inner = |s1: f64| {
                let r = (a.center + a.axis * s1 - p2).norm();
                c((dot * current(h1, s1) * i2 - slope(h1, s1) * di2 / (k * k)).abs() / r, 0.0)
            };
            c(quadrature::l1_estimate(&abs_inner, &[-h1, 0.0, h1]), 0.0)
        },
        &outer_points,
    );
    let integral = quadrature::integrate_with_floor(outer, &outer_points, QUADRATURE_REL_TOL, QUADRATURE_REL_TOL * magnitude);
    let scale = k * ETA_0 / (4.0 * PI * (k * h1).sin() * (k * h2).sin());
    c(0.0, scale) * integral
}

/// Closest distance between the two wire axes (as finite segments).
fn segment_distance(a: &DipoleGeometry, b: &DipoleGeometry) -> f64 {
    let (h1, h2) = (a.half_length(), b.half_length());
    let w = a.center - b.center;
    let bb = a.axis.dot(&b.axis);
    let d = a.axis.dot(&w);
    let e = b.axis.dot(&w);
    let denom = 1.0 - bb * bb;
    let mut s = if denom > 1e-14 {
        ((bb * e - d) / denom).clamp(-h1, h1)
    } else {
        0.0
    };
    let t = (e + bb * s).clamp(-h2, h2);
    s = (bb * t - d).clamp(-h1, h1);
    (w + a.axis * s - b.axis * t).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Transmitter,
    Receiver,
    Ris,
}

/// One radiator group (a transmitter, a receiver or a RIS) with its wires.
#[derive(Debug, Clone)]
pub struct RadiatorGroup {
    pub kind: GroupKind,
    /// Index within its kind (j, i or k).
    pub id: usize,
    pub dipoles: Vec<DipoleGeometry>,
}

impl RadiatorGroup {
    pub fn new(kind: GroupKind, id: usize, dipoles: Vec<DipoleGeometry>) -> Result<Self> {
        let g = RadiatorGroup { kind, id, dipoles };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dipoles.is_empty() {
            return Err(Error::Geometry(format!("{:?} {} has no elements", self.kind, self.id)));
        }
        for (p, d) in self.dipoles.iter().enumerate() {
            d.validate()?;
            for (q, e) in self.dipoles.iter().enumerate().skip(p + 1) {
                if d.center == e.center {
                    return Err(Error::Geometry(format!(
                        "{:?} {}: elements {p} and {q} share a center",
                        self.kind, self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dipoles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dipoles.is_empty()
    }
}

/// Internal impedances of the generators and receive loads (ohms, per port).
#[derive(Debug, Clone, Copy)]
pub struct Termination {
    pub generator: Complex64,
    pub load: Complex64,
}

impl Default for Termination {
    fn default() -> Self {
        Termination {
            generator: c(50.0, 0.0),
            load: c(50.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupInfo {
    pub kind: GroupKind,
    pub id: usize,
    pub size: usize,
}

/// All impedance blocks of a scenario. Immutable once built.
#[derive(Debug, Clone)]
pub struct ImpedanceSet {
    groups: Vec<GroupInfo>,
    /// Row-major over group pairs: `blocks[x * n + y]` is `Z_{x,y}`.
    blocks: Vec<CMat>,
    generator: Vec<DVector<Complex64>>,
    load: Vec<DVector<Complex64>>,
}

impl ImpedanceSet {
    /// Builds a set from precomputed blocks, checking dimensions, reciprocity
    /// and the sign of the resistive parts.
    pub fn from_blocks(
        groups: Vec<GroupInfo>,
        blocks: Vec<CMat>,
        generator: Vec<DVector<Complex64>>,
        load: Vec<DVector<Complex64>>,
    ) -> Result<Self> {
        let set = ImpedanceSet {
            groups,
            blocks,
            generator,
            load,
        };
        set.check()?;
        Ok(set)
    }

    fn check(&self) -> Result<()> {
        let n = self.groups.len();
        if self.blocks.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} blocks for {n} groups",
                self.blocks.len()
            )));
        }
        for kind in [GroupKind::Transmitter, GroupKind::Receiver, GroupKind::Ris] {
            let count = self.count(kind);
            for id in 0..count {
                if self.find(kind, id).is_none() {
                    return Err(Error::Dimension(format!("{kind:?} ids are not contiguous")));
                }
            }
        }
        if self.generator.len() != self.count(GroupKind::Transmitter)
            || self.load.len() != self.count(GroupKind::Receiver)
        {
            return Err(Error::Dimension("termination count does not match groups".into()));
        }
        for (x, gx) in self.groups.iter().enumerate() {
            for (y, gy) in self.groups.iter().enumerate() {
                let b = &self.blocks[x * n + y];
                if b.nrows() != gx.size || b.ncols() != gy.size {
                    return Err(Error::Dimension(format!(
                        "block ({x},{y}) is {}x{}, expected {}x{}",
                        b.nrows(),
                        b.ncols(),
                        gx.size,
                        gy.size
                    )));
                }
            }
        }
        for j in 0..self.generator.len() {
            let size = self.groups[self.tx(j)].size;
            if self.generator[j].len() != size || self.generator[j].iter().any(|z| z.re <= 0.0) {
                return Err(Error::Domain(format!(
                    "generator impedances of transmitter {j} must have {size} entries with positive real part"
                )));
            }
        }
        for i in 0..self.load.len() {
            let size = self.groups[self.rx(i)].size;
            if self.load[i].len() != size || self.load[i].iter().any(|z| z.re <= 0.0) {
                return Err(Error::Domain(format!(
                    "load impedances of receiver {i} must have {size} entries with positive real part"
                )));
            }
        }
        Ok(())
    }

    fn find(&self, kind: GroupKind, id: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.kind == kind && g.id == id)
    }

    pub fn count(&self, kind: GroupKind) -> usize {
        self.groups.iter().filter(|g| g.kind == kind).count()
    }

    pub fn groups(&self) -> &[GroupInfo] {
        &self.groups
    }

    pub fn tx(&self, j: usize) -> usize {
        self.find(GroupKind::Transmitter, j).expect("transmitter index out of range")
    }

    pub fn rx(&self, i: usize) -> usize {
        self.find(GroupKind::Receiver, i).expect("receiver index out of range")
    }

    pub fn ris(&self, k: usize) -> usize {
        self.find(GroupKind::Ris, k).expect("RIS index out of range")
    }

    /// `Z_{x,y}` for group positions `x`, `y` (see [`Self::tx`], [`Self::rx`], [`Self::ris`]).
    pub fn block(&self, x: usize, y: usize) -> &CMat {
        &self.blocks[x * self.groups.len() + y]
    }

    /// Diagonal generator impedances `Z_j` of transmitter `j`.
    pub fn generator(&self, j: usize) -> CMat {
        CMat::from_diagonal(&self.generator[j])
    }

    /// Diagonal load impedances `Z_i` of receiver `i`.
    pub fn load(&self, i: usize) -> CMat {
        CMat::from_diagonal(&self.load[i])
    }

    pub fn load_diagonal(&self, i: usize) -> &DVector<Complex64> {
        &self.load[i]
    }

    /// Largest relative violation of `Z_{x,y} = Z_{y,x}^T`.
    pub fn reciprocity_error(&self) -> f64 {
        let n = self.groups.len();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let a = self.block(x, y);
                let b = self.block(y, x);
                for r in 0..a.nrows() {
                    for s in 0..a.ncols() {
                        let scale = a[(r, s)].norm().max(b[(s, r)].norm());
                        if scale > 0.0 {
                            worst = worst.max((a[(r, s)] - b[(s, r)]).norm() / scale);
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Computes every block of every ordered pair of groups element by element.
/// Work is spread over the rayon pool; `Z_{y,x}` is filled as `Z_{x,y}^T`.
pub fn assemble_impedance_set(
    groups: &[RadiatorGroup],
    wavelength: f64,
    termination: Termination,
) -> Result<ImpedanceSet> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::Domain(format!("wavelength {wavelength} must be > 0")));
    }
    for g in groups {
        g.validate()?;
    }
    let n = groups.len();
    let mut jobs = Vec::new();
    for x in 0..n {
        for y in x..n {
            for p in 0..groups[x].len() {
                let q0 = if x == y { p } else { 0 };
                for q in q0..groups[y].len() {
                    jobs.push((x, y, p, q));
                }
            }
        }
    }
    let values: Vec<Complex64> = jobs
        .par_iter()
        .map(|&(x, y, p, q)| {
            dipole_mutual_impedance(&groups[x].dipoles[p], &groups[y].dipoles[q], wavelength)
                .map_err(|e| Error::GeometryAt {
                    group_a: x,
                    elem_a: p,
                    group_b: y,
                    elem_b: q,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let mut blocks: Vec<CMat> = (0..n * n)
        .map(|idx| CMat::zeros(groups[idx / n].len(), groups[idx % n].len()))
        .collect();
    for (&(x, y, p, q), z) in jobs.iter().zip(values) {
        blocks[x * n + y][(p, q)] = z;
        blocks[y * n + x][(q, p)] = z;
    }

    let infos: Vec<GroupInfo> = groups
        .iter()
        .map(|g| GroupInfo {
            kind: g.kind,
            id: g.id,
            size: g.len(),
        })
        .collect();
    let generator = groups
        .iter()
        .filter(|g| g.kind == GroupKind::Transmitter)
        .map(|g| (g.id, DVector::from_element(g.len(), termination.generator)))
        .collect::<Vec<_>>();
    let load = groups
        .iter()
        .filter(|g| g.kind == GroupKind::Receiver)
        .map(|g| (g.id, DVector::from_element(g.len(), termination.load)))
        .collect::<Vec<_>>();
    let by_id = |mut v: Vec<(usize, DVector<Complex64>)>| {
        v.sort_by_key(|(id, _)| *id);
        v.into_iter().map(|(_, d)| d).collect::<Vec<_>>()
    };
    ImpedanceSet::from_blocks(infos, blocks, by_id(generator), by_id(load))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 1.0;

    fn half_wave(center: Vector3<f64>) -> DipoleGeometry {
        DipoleGeometry::z_directed(center, LAMBDA / 2.0, LAMBDA / 500.0).unwrap()
    }

    #[test]
    fn half_wave_self_impedance() {
        let d = half_wave(Vector3::zeros());
        let z = dipole_mutual_impedance(&d, &d, LAMBDA).unwrap();
        // induced-EMF value 30 Cin(2π) + j 30 Si(2π) for a vanishing radius
        assert!((z.re - 73.08).abs() < 0.05, "{z}");
        assert!((z.im - 42.5).abs() < 1.0, "{z}");
        // thin-wire limit of the reactance is 30 Si(2π) = 42.54
        let thin = DipoleGeometry::z_directed(Vector3::zeros(), LAMBDA / 2.0, 1e-6).unwrap();
        let zt = dipole_mutual_impedance(&thin, &thin, LAMBDA).unwrap();
        assert!((zt.im - 42.54).abs() < 0.05, "{zt}");
    }

    #[test]
    fn short_dipole_radiation_resistance() {
        // R = 20 pi^2 (l/lambda)^2 for a short dipole with triangular current
        let l = LAMBDA / 32.0;
        let d = DipoleGeometry::z_directed(Vector3::zeros(), l, LAMBDA / 500.0).unwrap();
        let z = dipole_mutual_impedance(&d, &d, LAMBDA).unwrap();
        let expected = 20.0 * PI * PI * (l / LAMBDA).powi(2);
        assert!((z.re - expected).abs() < 0.01 * expected, "{z} vs {expected}");
        assert!(z.im < -1000.0, "short dipole must be strongly capacitive: {z}");
    }

    #[test]
    fn argument_order_is_irrelevant() {
        let a = half_wave(Vector3::new(0.0, 0.0, 0.0));
        let b = half_wave(Vector3::new(0.0, 0.37, 0.11));
        let ab = dipole_mutual_impedance(&a, &b, LAMBDA).unwrap();
        let ba = dipole_mutual_impedance(&b, &a, LAMBDA).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn overlapping_wires_are_rejected() {
        let a = half_wave(Vector3::new(0.0, 0.0, 0.0));
        let b = half_wave(Vector3::new(0.0, 0.001, 0.0));
        assert!(matches!(dipole_mutual_impedance(&a, &b, LAMBDA), Err(Error::Geometry(_))));
    }

    #[test]
    fn zero_wavelength_is_a_domain_error() {
        let a = half_wave(Vector3::zeros());
        assert!(matches!(dipole_mutual_impedance(&a, &a, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn thin_wire_and_axis_invariants() {
        assert!(DipoleGeometry::z_directed(Vector3::zeros(), 0.1, 0.02).is_err());
        assert!(DipoleGeometry::new(Vector3::zeros(), 0.5, 0.001, Vector3::new(0.0, 0.0, 1.001)).is_err());
        assert!(DipoleGeometry::z_directed(Vector3::zeros(), -1.0, 0.001).is_err());
    }

    #[test]
    fn antiparallel_flips_sign() {
        let a = half_wave(Vector3::zeros());
        let b = half_wave(Vector3::new(0.0, 0.3, 0.0));
        let mut b_rev = b;
        b_rev.axis = -Vector3::z();
        let z = dipole_mutual_impedance(&a, &b, LAMBDA).unwrap();
        let zr = dipole_mutual_impedance(&a, &b_rev, LAMBDA).unwrap();
        assert!((z + zr).norm() < 1e-9 * z.norm());
    }

    #[test]
    fn parallel_routes_agree() {
        // parallel wires through both the closed-form field and the double integral
        let a = half_wave(Vector3::zeros());
        let b = DipoleGeometry::z_directed(Vector3::new(0.0, 0.4, 0.13), 0.3, 0.002).unwrap();
        let k = 2.0 * PI / LAMBDA;
        let direct = dipole_mutual_impedance(&a, &b, LAMBDA).unwrap();
        let double = double_integral_coupling(&a, &b, k);
        assert!((direct - double).norm() < 1e-7 * direct.norm(), "{direct} vs {double}");
    }

    #[test]
    fn orthogonal_broadside_wires_do_not_couple() {
        let a = half_wave(Vector3::zeros());
        let b = DipoleGeometry::new(Vector3::new(0.0, 1.0, 0.0), 0.5, 0.002, Vector3::x()).unwrap();
        let z = dipole_mutual_impedance(&a, &b, LAMBDA).unwrap();
        assert!(z.norm() < 1e-9, "{z}");
    }

    #[test]
    fn single_dipole_group() {
        let d = half_wave(Vector3::zeros());
        let g = RadiatorGroup::new(GroupKind::Ris, 0, vec![d]).unwrap();
        let set = assemble_impedance_set(&[g], LAMBDA, Termination::default()).unwrap();
        let zself = dipole_mutual_impedance(&d, &d, LAMBDA).unwrap();
        assert_eq!(set.block(0, 0)[(0, 0)], zself);
    }

    #[test]
    fn duplicate_centers_rejected() {
        let d = half_wave(Vector3::zeros());
        assert!(RadiatorGroup::new(GroupKind::Transmitter, 0, vec![d, d]).is_err());
    }

    #[test]
    fn geometry_errors_carry_indices() {
        let a = half_wave(Vector3::zeros());
        let b = half_wave(Vector3::new(0.0, 0.001, 0.0));
        let g0 = RadiatorGroup::new(GroupKind::Transmitter, 0, vec![a]).unwrap();
        let g1 = RadiatorGroup::new(GroupKind::Receiver, 0, vec![half_wave(Vector3::new(0.0, 3.0, 0.0)), b]).unwrap();
        let err = assemble_impedance_set(&[g0, g1], LAMBDA, Termination::default()).unwrap_err();
        match err {
            Error::GeometryAt { group_a, elem_a, group_b, elem_b, .. } => {
                assert_eq!((group_a, elem_a, group_b, elem_b), (0, 0, 1, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
