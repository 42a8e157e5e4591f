//! Calibration helper for the bundled cable constants.
//!
//! Prints antenna counts, the 256-QAM bandwidth and the peak line power over
//! 25..300 m for every category, then checks the reference targets:
//!
//! ```text
//! cargo run --release --example calibrate -- [--gap 8.5] [--set cat5.elfext_ref_db=60] [--scan-cat5 50:70:2]
//! ```
//!
//! `--set` accepts `k1`, `k2`, `k3` and `elfext_ref_db` and may be repeated.
//! `--scan-cat5 lo:hi:step` sweeps the Cat-5 ELFEXT reference instead.
//! The starting calibration honours `ROC_CALIBRATION`.

use clap::Parser;
use roc_fronthaul::band_plan::{McsProfile, ToneGrid, DEFAULT_GAP_DB};
use roc_fronthaul::cable_model::{build_channel_matrices, CableCategory, CableSpec, Calibration};
use roc_fronthaul::capacity_planner::{plan, AirLinkSpec, PlannerReport};
use roc_fronthaul::fext_comp::{compensate, CompensationMode};
use roc_fronthaul::osb_alloc::{run_osb, PowerConstraints};

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = DEFAULT_GAP_DB)]
    gap: f64,
    #[arg(long = "set", value_name = "CAT.KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_name = "LO:HI:STEP")]
    scan_cat5: Option<String>,
}

struct Probe {
    grid: ToneGrid,
    mcs: McsProfile,
    constraints: PowerConstraints,
    air: AirLinkSpec,
}

impl Probe {
    fn run(&self, cal: &Calibration, cat: CableCategory, len: f64, mode: CompensationMode) -> PlannerReport {
        let spec = CableSpec::new(cat, len, cal).expect("length in range");
        let ch = compensate(&build_channel_matrices(&spec, &self.grid).expect("grid in range"), mode);
        let alloc = run_osb(&ch, &self.mcs, &self.constraints).expect("valid profile");
        plan(&alloc, &self.grid, &ch, &self.air, self.mcs.max_bits()).expect("consistent plan")
    }
}

fn apply_override(cal: &mut Calibration, item: &str) -> Result<(), String> {
    let (key, value) = item.split_once('=').ok_or(format!("`{item}`: expected CAT.KEY=VALUE"))?;
    let (cat, field) = key.split_once('.').ok_or(format!("`{key}`: expected CAT.KEY"))?;
    let cat: CableCategory = cat.parse().map_err(|e| format!("{e}"))?;
    let value: f64 = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
    let mut c = *cal.constants(cat);
    match field {
        "k1" => c.il_coeffs[0] = value,
        "k2" => c.il_coeffs[1] = value,
        "k3" => c.il_coeffs[2] = value,
        "elfext_ref_db" => c.elfext_ref_db = value,
        _ => return Err(format!("unknown field `{field}`")),
    }
    cal.set_constants(cat, c).map_err(|e| e.to_string())
}

fn check(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "ok  " } else { "MISS" });
}

fn table(probe: &Probe, cal: &Calibration) {
    let lengths: Vec<f64> = (1..=12).map(|i| 25.0 * i as f64).collect();
    println!("N_a,max none/ideal, 256-QAM tones, peak line dBm");
    for cat in CableCategory::ALL {
        print!("{cat}:");
        for &len in &lengths {
            let none = probe.run(cal, cat, len, CompensationMode::None);
            let ideal = probe.run(cal, cat, len, CompensationMode::IdealZeroFext);
            let peak = none.line_power_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            print!(
                " {len}m={}/{}/q{}/{peak:.1}",
                none.n_antennas_max,
                ideal.n_antennas_max,
                (none.qam256_bandwidth_hz / probe.grid.tone_bandwidth_hz()).round()
            );
        }
        println!();
    }
}

fn targets(probe: &Probe, cal: &Calibration) {
    let none = CompensationMode::None;
    let c50 = probe.run(cal, CableCategory::Cat5, 50.0, none);
    let c100 = probe.run(cal, CableCategory::Cat5, 100.0, none);
    let c200 = probe.run(cal, CableCategory::Cat5, 200.0, none);
    check("cat5 50 m full load", c50.n_antennas_max == 88, format!("N={}", c50.n_antennas_max));
    check(
        "cat5 100 m antennas",
        (55..=71).contains(&c100.n_antennas_max),
        format!("N={} (55..=71)", c100.n_antennas_max),
    );
    let mhz = |r: &PlannerReport| r.qam256_bandwidth_hz / 1e6;
    check("cat5 50 m 256-QAM", mhz(&c50) >= 484.0, format!("{} MHz", mhz(&c50)));
    check(
        "cat5 100 m 256-QAM",
        (mhz(&c100) - 175.0).abs() <= 44.0,
        format!("{} MHz (175 +/- 44)", mhz(&c100)),
    );
    check(
        "cat5 200 m 256-QAM",
        (mhz(&c200) - 25.0).abs() <= 44.0,
        format!("{} MHz (25 +/- 44)", mhz(&c200)),
    );
    for cat in CableCategory::ALL {
        let worst = [25.0, 50.0, 75.0]
            .iter()
            .flat_map(|&l| {
                [none, CompensationMode::IdealZeroFext].map(|m| probe.run(cal, cat, l, m).n_antennas_max)
            })
            .min()
            .unwrap();
        check(&format!("{cat} <= 75 m"), worst == 88, format!("min N={worst}"));
    }
}

fn main() {
    let args = Args::parse();
    let mut cal = Calibration::from_env().unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(1)
    });
    for item in &args.overrides {
        if let Err(e) = apply_override(&mut cal, item) {
            eprintln!("--set {e}");
            std::process::exit(1);
        }
    }
    let probe = Probe {
        grid: ToneGrid::default(),
        mcs: McsProfile::from_gap(args.gap).expect("finite gap"),
        constraints: PowerConstraints::default(),
        air: AirLinkSpec::new(1, 88, 20.0, 22e6).expect("valid air link"),
    };

    if let Some(scan) = &args.scan_cat5 {
        let v: Vec<f64> = scan.split(':').filter_map(|s| s.parse().ok()).collect();
        let [lo, hi, step] = v[..] else {
            eprintln!("--scan-cat5 expects LO:HI:STEP");
            std::process::exit(1)
        };
        let mut e = lo;
        while e <= hi + 1e-9 {
            let mut c = *cal.constants(CableCategory::Cat5);
            c.elfext_ref_db = e;
            cal.set_constants(CableCategory::Cat5, c).expect("valid override");
            let r50 = probe.run(&cal, CableCategory::Cat5, 50.0, CompensationMode::None);
            let r100 = probe.run(&cal, CableCategory::Cat5, 100.0, CompensationMode::None);
            println!(
                "cat5 elfext {e:.1} dB: 50 m N={} 256-QAM={} MHz | 100 m N={} 256-QAM={} MHz",
                r50.n_antennas_max,
                r50.qam256_bandwidth_hz / 1e6,
                r100.n_antennas_max,
                r100.qam256_bandwidth_hz / 1e6
            );
            e += step;
        }
        return;
    }

    table(&probe, &cal);
    targets(&probe, &cal);
}
