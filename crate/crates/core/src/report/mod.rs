//! Scenario ingestion and CSV reporting for the `plan` binary.

mod scenario;
mod sweep;

pub use scenario::{
    parse_scenario, parse_scenario_str, LengthSweep, Scenario, DEFAULT_LENGTH_M, DEFAULT_OUTPUT_DIR,
    DEFAULT_SWEEP_POINTS, DEFAULT_SWEEP_START_M, DEFAULT_SWEEP_STOP_M,
};
pub use sweep::{
    compute_sweep, curve_csv, curve_points, evaluate_point, run_sweep, spectrum_csv, summary_csv, sweep_points,
    write_outputs, CurvePoint, PointResult, SweepPoint, SweepResults, CURVE_FILE, CURVE_HEADER, SPECTRUM_HEADER,
    SUMMARY_FILE, SUMMARY_HEADER,
};
