//! `plan <scenario-file> [--out DIR] [--points N] [--quiet]`
//!
//! Exit status: 0 on success, 1 on invalid input, 2 on filesystem errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use roc_fronthaul::cable_model::{Calibration, CALIBRATION_ENV};
use roc_fronthaul::report::{parse_scenario, run_sweep, SweepResults};
use roc_fronthaul::Error;

#[derive(Parser)]
#[command(
    name = "plan",
    version,
    about = "Sweep radio-over-copper fronthaul scenarios and write CSV tables",
    after_help = format!("The cable calibration file can be replaced by setting {CALIBRATION_ENV}.")
)]
struct Cli {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Output directory, overriding the scenario's `output_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of lengths on the antennas-vs-length curve.
    #[arg(long, value_name = "N")]
    points: Option<usize>,
    /// Do not print the per-point summary.
    #[arg(long)]
    quiet: bool,
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_io() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn print_summary(results: &SweepResults, threshold_db: f64) {
    println!("category length_m compensation N_a_max rate_Mbps max_P_dBm 256qam_MHz transparent");
    for r in &results.points {
        let rate: f64 = r.report.line_rate_bps.iter().sum();
        let peak = r.report.line_power_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{} {} {} {} {:.0} {:.2} {:.0} {}/{}",
            r.point.category,
            r.point.length_m,
            r.point.compensation,
            r.report.n_antennas_max,
            rate / 1e6,
            peak,
            r.report.qam256_bandwidth_hz / 1e6,
            r.report.transparent_antennas(threshold_db),
            r.report.mapping.len()
        );
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let calibration = Calibration::from_env()?;
    let mut scenario = parse_scenario(&cli.scenario)?;
    if let Some(out) = cli.out {
        scenario.output_dir = out;
    }
    if let Some(points) = cli.points {
        scenario.length_sweep.points = points;
    }
    let (results, files) = run_sweep(&scenario, &calibration)?;
    if !cli.quiet {
        print_summary(&results, scenario.transparency_threshold_db);
        println!("wrote {} files to {}", files.len(), scenario.output_dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plan: {e}");
            exit_code(&e)
        }
    }
}
