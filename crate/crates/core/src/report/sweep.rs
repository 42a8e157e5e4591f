use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cable_model::{build_channel_matrices, CableCategory, CableSpec, Calibration};
use crate::capacity_planner::{plan, PlannerReport};
use crate::error::{Error, Result};
use crate::fext_comp::{compensate, CompensationMode};
use crate::osb_alloc::{run_osb, w_to_dbm, PowerAllocation};

use super::scenario::Scenario;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const CURVE_FILE: &str = "antennas_vs_length.csv";
pub const SUMMARY_HEADER: &str = "category,length_m,compensation,pair,B_c_Hz,R_bps,P_line_dBm,N_a_max";
pub const SPECTRUM_HEADER: &str = "f_center_hz,pair,bits,power_dbm";
pub const CURVE_HEADER: &str = "category,compensation,length_m,N_a_max";

/// One (category, length, compensation) point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub category: CableCategory,
    pub length_m: f64,
    pub compensation: CompensationMode,
}

impl SweepPoint {
    /// `spectrum_<category>_<length>m_<compensation>.csv`, with `:` mapped to `-`.
    pub fn spectrum_file_name(&self) -> String {
        format!(
            "spectrum_{}_{}m_{}.csv",
            self.category,
            self.length_m,
            self.compensation.label().replace(':', "-")
        )
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub allocation: PowerAllocation,
    pub report: PlannerReport,
    pub centers_hz: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub category: CableCategory,
    pub compensation: CompensationMode,
    pub length_m: f64,
    pub n_antennas_max: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResults {
    pub points: Vec<PointResult>,
    pub curve: Vec<CurvePoint>,
}

/// Builds channels, allocates and plans a single point.
pub fn evaluate_point(scenario: &Scenario, calibration: &Calibration, point: SweepPoint) -> Result<PointResult> {
    let spec = CableSpec::new(point.category, point.length_m, calibration)?
        .with_psd(scenario.noise_psd_dbm_hz, scenario.mask_psd_dbm_hz)?;
    let channels = compensate(&build_channel_matrices(&spec, &scenario.grid)?, point.compensation);
    let allocation = run_osb(&channels, &scenario.mcs, &scenario.constraints)?;
    let report = plan(
        &allocation,
        &scenario.grid,
        &channels,
        &scenario.air,
        scenario.mcs.max_bits(),
    )?;
    Ok(PointResult {
        point,
        allocation,
        report,
        centers_hz: scenario.grid.centers_hz().to_vec(),
    })
}

/// Points in output order: category, then length, then compensation.
pub fn sweep_points(scenario: &Scenario) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &category in &scenario.categories {
        for &length_m in &scenario.lengths_m {
            for &compensation in &scenario.compensations {
                out.push(SweepPoint {
                    category,
                    length_m,
                    compensation,
                });
            }
        }
    }
    out
}

/// Curve points in output order: category, then compensation, then length.
pub fn curve_points(scenario: &Scenario) -> Vec<SweepPoint> {
    let lengths = scenario.length_sweep.lengths();
    let mut out = Vec::new();
    for &category in &scenario.categories {
        for &compensation in &scenario.compensations {
            for &length_m in &lengths {
                out.push(SweepPoint {
                    category,
                    length_m,
                    compensation,
                });
            }
        }
    }
    out
}

/// Evaluates every sweep and curve point without touching the filesystem.
pub fn compute_sweep(scenario: &Scenario, calibration: &Calibration) -> Result<SweepResults> {
    let points = sweep_points(scenario)
        .into_par_iter()
        .map(|p| evaluate_point(scenario, calibration, p))
        .collect::<Result<Vec<_>>>()?;
    let curve = curve_points(scenario)
        .into_par_iter()
        .map(|p| {
            evaluate_point(scenario, calibration, p).map(|r| CurvePoint {
                category: p.category,
                compensation: p.compensation,
                length_m: p.length_m,
                n_antennas_max: r.report.n_antennas_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResults { points, curve })
}

fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".plan-write-check");
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn dbm(w: f64) -> String {
    if w > 0.0 {
        format!("{:.6}", w_to_dbm(w))
    } else {
        "-inf".to_string()
    }
}

pub fn summary_csv(results: &SweepResults) -> String {
    let mut s = String::new();
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    for r in &results.points {
        for pair in 0..r.report.useful_bandwidth_hz.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.point.category,
                r.point.length_m,
                r.point.compensation,
                pair,
                r.report.useful_bandwidth_hz[pair],
                r.report.line_rate_bps[pair],
                dbm(r.allocation.line_power_w[pair]),
                r.report.n_antennas_max
            );
        }
    }
    s
}

pub fn spectrum_csv(result: &PointResult) -> String {
    let mut s = String::new();
    s.push_str(SPECTRUM_HEADER);
    s.push('\n');
    for (k, f) in result.centers_hz.iter().enumerate() {
        for (pair, (&b, &p)) in result.allocation.bits[k]
            .iter()
            .zip(&result.allocation.powers_w[k])
            .enumerate()
        {
            let _ = writeln!(s, "{f},{pair},{b},{}", dbm(p));
        }
    }
    s
}

pub fn curve_csv(results: &SweepResults) -> String {
    let mut s = String::new();
    s.push_str(CURVE_HEADER);
    s.push('\n');
    for c in &results.curve {
        let _ = writeln!(s, "{},{},{},{}", c.category, c.compensation, c.length_m, c.n_antennas_max);
    }
    s
}

/// Writes every table into `dir` and returns the paths in write order.
pub fn write_outputs(results: &SweepResults, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![(dir.join(SUMMARY_FILE), summary_csv(results))];
    for r in &results.points {
        files.push((dir.join(r.point.spectrum_file_name()), spectrum_csv(r)));
    }
    files.push((dir.join(CURVE_FILE), curve_csv(results)));
    files
        .into_iter()
        .map(|(path, body)| {
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Checks `output_dir`, evaluates the sweep and writes the CSV tables.
pub fn run_sweep(scenario: &Scenario, calibration: &Calibration) -> Result<(SweepResults, Vec<PathBuf>)> {
    ensure_writable(&scenario.output_dir)?;
    let results = compute_sweep(scenario, calibration)?;
    let files = write_outputs(&results, &scenario.output_dir)?;
    Ok((results, files))
}
