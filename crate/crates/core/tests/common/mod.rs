#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use roc_fronthaul::band_plan::{McsProfile, ToneGrid};
use roc_fronthaul::cable_model::{build_channel_matrices, CableCategory, CableSpec, Calibration, ChannelMatrixSet, ToneChannel};
use roc_fronthaul::capacity_planner::{plan, AirLinkSpec, PlannerReport};
use roc_fronthaul::fext_comp::{compensate, CompensationMode};
use roc_fronthaul::osb_alloc::{run_osb, PowerAllocation, PowerConstraints};

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

/// Random tone with direct gains in [1e-6, 1e-1], FEXT 10..60 dB below the
/// victim's direct path, and noise in [1e-13, 1e-9] W.
pub fn random_tone<R: Rng>(rng: &mut R, n: usize) -> ToneChannel {
    let diag: Vec<f64> = (0..n).map(|_| log_uniform(rng, 1e-6, 1e-1)).collect();
    let gains = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            diag[r]
        } else {
            diag[r] * 10f64.powf(-rng.gen_range(10.0..60.0) / 10.0)
        }
    });
    let noise_w = DVector::from_fn(n, |_, _| log_uniform(rng, 1e-13, 1e-9));
    ToneChannel {
        center_hz: 100e6,
        gains,
        noise_w,
    }
}

pub fn random_channels<R: Rng>(rng: &mut R, n_tones: usize, n_pairs: usize) -> ChannelMatrixSet {
    ChannelMatrixSet {
        tone_bandwidth_hz: 22e6,
        tones: (0..n_tones).map(|_| random_tone(rng, n_pairs)).collect(),
    }
}

pub struct Point {
    pub alloc: PowerAllocation,
    pub report: PlannerReport,
}

pub fn evaluate(cat: CableCategory, length_m: f64, mode: CompensationMode, constraints: &PowerConstraints) -> Point {
    let grid = ToneGrid::default();
    let spec = CableSpec::new(cat, length_m, &Calibration::default()).unwrap();
    let channels = compensate(&build_channel_matrices(&spec, &grid).unwrap(), mode);
    let mcs = McsProfile::default();
    let alloc = run_osb(&channels, &mcs, constraints).unwrap();
    let air = AirLinkSpec::new(1, grid.resource_count(), 20.0, grid.tone_bandwidth_hz()).unwrap();
    let report = plan(&alloc, &grid, &channels, &air, mcs.max_bits()).unwrap();
    Point { alloc, report }
}

pub fn evaluate_default(cat: CableCategory, length_m: f64, mode: CompensationMode) -> Point {
    evaluate(cat, length_m, mode, &PowerConstraints::default())
}

/// Mask, budget and sign constraints, checked without tolerance.
pub fn check_feasible(alloc: &PowerAllocation, constraints: &PowerConstraints) -> Result<(), String> {
    let mask = constraints.per_tone_mask_w();
    let budget = constraints.per_line_total_w();
    for (k, row) in alloc.powers_w.iter().enumerate() {
        for (n, &p) in row.iter().enumerate() {
            if !(p >= 0.0 && p <= mask) {
                return Err(format!("tone {k} pair {n}: p = {p} W outside [0, {mask}]"));
            }
            if (p > 0.0) != (alloc.bits[k][n] > 0) {
                return Err(format!("tone {k} pair {n}: p = {p} W with {} bits", alloc.bits[k][n]));
            }
        }
    }
    for (n, &total) in alloc.line_power_w.iter().enumerate() {
        let sum: f64 = alloc.powers_w.iter().map(|row| row[n]).sum();
        if sum > budget || total > budget {
            return Err(format!("line {n}: {sum} W over budget {budget} W"));
        }
    }
    Ok(())
}
