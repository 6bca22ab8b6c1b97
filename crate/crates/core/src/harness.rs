//! Experiment orchestration and CSV output.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::array_factor::{excitation, steering_magnitude, to_db, AfGeometry};
use crate::channel::{channel_farfield_bundle, ChannelBundle};
use crate::em::{assemble_impedance_set, ImpedanceSet};
use crate::error::{Error, Result};
use crate::optimizer::{bcd_optimize, CouplingMode, IterationRecord, OptimizationRun};
use crate::scenario::Scenario;

pub const TRACE_SCHEMA: &str = "# ris-sumrate trace v1";
pub const SWEEP_SCHEMA: &str = "# ris-sumrate sweep v1";
pub const AF_SCHEMA: &str = "# ris-sumrate af v1";

/// Impedances and far-field channel blocks of a scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub impedance: ImpedanceSet,
    pub bundle: ChannelBundle,
}

pub fn build_model(scenario: &Scenario) -> Result<Model> {
    scenario.validate()?;
    let groups = scenario.radiator_groups()?;
    let impedance = assemble_impedance_set(&groups, scenario.wavelength(), scenario.termination())?;
    let bundle = channel_farfield_bundle(&impedance, scenario.nlos)?;
    Ok(Model { impedance, bundle })
}

/// Runs the optimizer on an already-built model.
pub fn optimize(scenario: &Scenario, model: &Model, mode: CouplingMode) -> Result<OptimizationRun> {
    bcd_optimize(
        &model.bundle,
        &scenario.link_budget()?,
        scenario.r0_ohm,
        &scenario.optimizer_options(mode),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub mode: CouplingMode,
    pub record: IterationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub l: usize,
    /// Element spacing in wavelengths.
    pub d: f64,
    #[serde(rename = "P")]
    pub p: usize,
    pub mode: CouplingMode,
    pub sum_rate_bits: f64,
    pub optimizer_sum_rate_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfRow {
    pub theta_rad: f64,
    pub af_db: f64,
    pub link_id: usize,
}

/// Direction from the RIS center toward a receiver, for one AF cut.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfLink {
    pub link_id: usize,
    pub interfered_receiver: usize,
    pub theta_rad: f64,
    pub elevation_rad: f64,
    /// AF toward the interfered receiver, dB relative to the cut's peak.
    pub af_db_at_interfered: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub iterations: usize,
    pub delta: f64,
    pub modes: Vec<CouplingMode>,
    pub crate_version: String,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub af_links: Vec<AfLink>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub trace: Vec<TraceRow>,
    pub sweep: Vec<SweepRow>,
    pub af: Vec<AfRow>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    fn empty(experiment: &str, scenario: &Scenario, modes: &[CouplingMode]) -> Self {
        ExperimentResult {
            trace: Vec::new(),
            sweep: Vec::new(),
            af: Vec::new(),
            metadata: Metadata {
                experiment: experiment.to_string(),
                scenario_hash: scenario.hash(),
                seed: scenario.seed,
                iterations: scenario.iterations,
                delta: scenario.delta,
                modes: modes.to_vec(),
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_s: 0.0,
                af_links: Vec::new(),
            },
        }
    }
}

/// Convergence traces for each mode, all from the same seed.
pub fn run_convergence(scenario: &Scenario, modes: &[CouplingMode]) -> Result<ExperimentResult> {
    let start = Instant::now();
    let model = build_model(scenario)?;
    let mut result = ExperimentResult::empty("convergence", scenario, modes);
    let runs: Vec<Result<OptimizationRun>> = modes.par_iter().map(|m| optimize(scenario, &model, *m)).collect();
    for run in runs {
        let run = run?;
        result
            .trace
            .extend(run.trace.into_iter().map(|record| TraceRow { mode: run.mode, record }));
    }
    result.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Final sum-rates over antenna counts (`M = L`) and element spacings given
/// in wavelengths. Each spacing uses the one-wavelength aperture.
pub fn run_antenna_sweep(
    scenario: &Scenario,
    l_values: &[usize],
    spacings: &[f64],
    modes: &[CouplingMode],
) -> Result<ExperimentResult> {
    let start = Instant::now();
    let mut jobs = Vec::new();
    for &d in spacings {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::validation("spacings", format!("{d} is not a positive spacing")));
        }
        let side = (1.0 / d).round();
        if (side - 1.0 / d).abs() > 1e-9 || side < 1.0 {
            return Err(Error::validation("spacings", format!("1/{d} is not an integer")));
        }
        let mut s = scenario.clone();
        s.ris_spacing_m = Some(d * scenario.wavelength());
        s.ris_elements = (side * side) as usize;
        s.wavelength_aperture = true;
        for &l in l_values {
            let mut sl = s.clone();
            sl.tx_antennas = l;
            sl.rx_antennas = l;
            sl.validate()?;
            jobs.push((l, d, sl));
        }
    }
    let rows: Vec<Result<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|(l, d, s)| {
            let model = build_model(s)?;
            modes
                .iter()
                .map(|m| {
                    let run = optimize(s, &model, *m)?;
                    let last = run.trace.last().expect("trace holds the initial row");
                    Ok(SweepRow {
                        l: *l,
                        d: *d,
                        p: s.ris_elements,
                        mode: *m,
                        sum_rate_bits: last.sum_rate_bits,
                        optimizer_sum_rate_bits: last.optimizer_sum_rate_bits,
                    })
                })
                .collect()
        })
        .collect();
    let mut result = ExperimentResult::empty("sweep", scenario, modes);
    for r in rows {
        result.sweep.extend(r?);
    }
    result
        .sweep
        .sort_by(|a, b| (a.l, a.mode.as_str()).cmp(&(b.l, b.mode.as_str())).then(b.d.total_cmp(&a.d)));
    result.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Azimuth from broadside (`+x`) and elevation of `target` seen from `origin`.
pub fn angles_toward(origin: &Vector3<f64>, target: &Vector3<f64>) -> (f64, f64) {
    let d = target - origin;
    (d.y.atan2(d.x), d.z.atan2((d.x * d.x + d.y * d.y).sqrt()))
}

/// `n` equally spaced angles over `[-π/2, π/2]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    let h = std::f64::consts::FRAC_PI_2;
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -h + 2.0 * h * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Array-factor cuts of RIS `ris_index` after optimizing in the scenario's
/// mode. Link `j` (1-based `link_id`) uses precoder `V_j`; its cut lies in
/// the cone through the first receiver other than `j`.
pub fn run_array_factor(scenario: &Scenario, ris_index: usize, theta_points: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    if ris_index >= scenario.ris_centers.len() {
        return Err(Error::validation(
            "ris_index",
            format!("{ris_index} out of range for {} surfaces", scenario.ris_centers.len()),
        ));
    }
    if theta_points == 0 {
        return Err(Error::validation("theta_points", "must be >= 1"));
    }
    let model = build_model(scenario)?;
    let run = optimize(scenario, &model, scenario.mode)?;
    let mut result = ExperimentResult::empty("af", scenario, &[scenario.mode]);
    let c = scenario.ris_centers[ris_index];
    let center = Vector3::new(c[0], c[1], c[2]);
    let thetas = theta_grid(theta_points);
    let n = scenario.pairs.len();
    for j in 0..n {
        let victim = (0..n).find(|&i| i != j).unwrap_or(j);
        let r = scenario.pairs[victim].rx;
        let (theta_v, elev_v) = angles_toward(&center, &Vector3::new(r[0], r[1], r[2]));
        let geometry = AfGeometry {
            positions: scenario.ris_offsets(),
            wavelength: scenario.wavelength(),
            elevation: elev_v,
        };
        let exc = excitation(&model.bundle, run.state.ris(), ris_index, j, &run.state.precoders.v[j])?;
        let mut grid = thetas.clone();
        grid.push(theta_v);
        let mags = steering_magnitude(&exc, &geometry, &grid)?;
        let (on_grid, toward_victim) = mags.split_at(thetas.len());
        let db = to_db(on_grid)?;
        let peak = on_grid.iter().cloned().fold(0.0, f64::max);
        for (theta, v) in thetas.iter().zip(&db) {
            result.af.push(AfRow { theta_rad: *theta, af_db: *v, link_id: j + 1 });
        }
        result.metadata.af_links.push(AfLink {
            link_id: j + 1,
            interfered_receiver: victim + 1,
            theta_rad: theta_v,
            elevation_rad: elev_v,
            af_db_at_interfered: 20.0 * (toward_victim[0] / peak).log10(),
        });
    }
    result.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

fn trace_header(k: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string(), "mode".into(), "sum_rate_bits".into(), "wmse".into()];
    h.extend((1..=k).map(|i| format!("mu_{i}")));
    h.extend((1..=k).map(|i| format!("delta_norm_{i}")));
    h.push("optimizer_sum_rate_bits".into());
    h
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn write_csv<W: Write>(mut out: W, schema: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "{schema}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let k = rows.first().map(|r| r.record.mu_ris.len()).unwrap_or(0);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let rec = &r.record;
            let mut v = vec![rec.iteration.to_string(), r.mode.as_str().to_string(), fmt(rec.sum_rate_bits), fmt(rec.wmse)];
            v.extend(rec.mu_ris.iter().map(|x| fmt(*x)));
            v.extend(rec.delta_norm.iter().map(|x| fmt(*x)));
            v.push(fmt(rec.optimizer_sum_rate_bits));
            v
        })
        .collect();
    write_csv(out, TRACE_SCHEMA, &trace_header(k), &body)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let header: Vec<String> = ["L", "d", "P", "mode", "sum_rate_bits", "optimizer_sum_rate_bits"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.l.to_string(),
                fmt(r.d),
                r.p.to_string(),
                r.mode.as_str().to_string(),
                fmt(r.sum_rate_bits),
                fmt(r.optimizer_sum_rate_bits),
            ]
        })
        .collect();
    write_csv(out, SWEEP_SCHEMA, &header, &body)
}

pub fn write_af_csv<W: Write>(out: W, rows: &[AfRow]) -> Result<()> {
    let header: Vec<String> = ["theta_rad", "af_db", "link_id"].iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt(r.theta_rad), fmt(r.af_db), r.link_id.to_string()])
        .collect();
    write_csv(out, AF_SCHEMA, &header, &body)
}

/// Writes the non-empty CSV kinds plus `metadata.json` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if !result.trace.is_empty() {
        write_trace_csv(File::create(dir.join("trace.csv"))?, &result.trace)?;
    }
    if !result.sweep.is_empty() {
        write_sweep_csv(File::create(dir.join("sweep.csv"))?, &result.sweep)?;
    }
    if !result.af.is_empty() {
        write_af_csv(File::create(dir.join("af.csv"))?, &result.af)?;
    }
    let meta = serde_json::to_string_pretty(&result.metadata)?;
    std::fs::write(dir.join("metadata.json"), meta + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_endpoints() {
        let g = theta_grid(3);
        assert_eq!(g, vec![-std::f64::consts::FRAC_PI_2, 0.0, std::f64::consts::FRAC_PI_2]);
    }

    #[test]
    fn broadside_angle_is_zero() {
        let (t, e) = angles_toward(&Vector3::zeros(), &Vector3::new(3.0, 0.0, 0.0));
        assert_eq!((t, e), (0.0, 0.0));
    }

    #[test]
    fn trace_header_columns() {
        assert_eq!(
            trace_header(2).join(","),
            "iteration,mode,sum_rate_bits,wmse,mu_1,mu_2,delta_norm_1,delta_norm_2,optimizer_sum_rate_bits"
        );
    }
}
