//! Scenario files.
//!
//! A scenario is a TOML document; every key is optional:
//!
//! ```toml
//! category = "cat5"            # or a list: ["cat5", "cat6", "cat7"]
//! lengths = [50, 100, 200]     # meters, each in (0, 500]
//! compensation = "none"        # none | ideal | thp:<loss_db>, or a list
//! total_bandwidth_hz = 500e6
//! tone_bandwidth_hz = 22e6
//! n_pairs = 4
//! per_line_total_dbm = 4.0
//! mask_psd_dbm_hz = -80.0
//! noise_psd_dbm_hz = -140.0
//! gap_db = 8.5
//! mcs = ["2:13.27", "4:20.26"] # explicit b:γ_dB table, replaces gap_db
//! output_dir = "out"
//! air_snr_db = 20.0
//! air_bandwidth_hz = 22e6
//! n_users = 1
//! n_antennas = 88              # defaults to the grid's resource count
//! transparency_threshold_db = 3.0
//!
//! [length_sweep]               # antennas-vs-length curve
//! start_m = 25
//! stop_m = 300
//! points = 12
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::band_plan::{
    McsProfile, ToneGrid, DEFAULT_GAP_DB, DEFAULT_PAIRS, DEFAULT_TONE_BANDWIDTH_HZ, DEFAULT_TOTAL_BANDWIDTH_HZ,
};
use crate::cable_model::{
    CableCategory, DEFAULT_MASK_PSD_DBM_HZ, DEFAULT_NOISE_PSD_DBM_HZ, MAX_MODEL_LENGTH_M,
};
use crate::capacity_planner::{AirLinkSpec, DEFAULT_AIR_SNR_DB, DEFAULT_TRANSPARENCY_THRESHOLD_DB};
use crate::error::{Error, Result};
use crate::fext_comp::CompensationMode;
use crate::osb_alloc::{PowerConstraints, DEFAULT_LINE_TOTAL_DBM};

pub const DEFAULT_LENGTH_M: f64 = 100.0;
pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_SWEEP_START_M: f64 = 25.0;
pub const DEFAULT_SWEEP_STOP_M: f64 = 300.0;
pub const DEFAULT_SWEEP_POINTS: usize = 12;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start_m: Option<f64>,
    stop_m: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    category: Option<OneOrMany<String>>,
    lengths: Option<OneOrMany<f64>>,
    compensation: Option<OneOrMany<String>>,
    total_bandwidth_hz: Option<f64>,
    tone_bandwidth_hz: Option<f64>,
    n_pairs: Option<usize>,
    per_line_total_dbm: Option<f64>,
    mask_psd_dbm_hz: Option<f64>,
    noise_psd_dbm_hz: Option<f64>,
    gap_db: Option<f64>,
    mcs: Option<Vec<String>>,
    output_dir: Option<PathBuf>,
    air_snr_db: Option<f64>,
    air_bandwidth_hz: Option<f64>,
    n_users: Option<usize>,
    n_antennas: Option<usize>,
    transparency_threshold_db: Option<f64>,
    length_sweep: Option<RawSweep>,
}

/// Evenly spaced lengths for the antennas-vs-length curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthSweep {
    pub start_m: f64,
    pub stop_m: f64,
    pub points: usize,
}

impl LengthSweep {
    pub fn lengths(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.start_m],
            n => {
                let step = (self.stop_m - self.start_m) / (n - 1) as f64;
                (0..n).map(|i| self.start_m + step * i as f64).collect()
            }
        }
    }
}

impl Default for LengthSweep {
    fn default() -> Self {
        LengthSweep {
            start_m: DEFAULT_SWEEP_START_M,
            stop_m: DEFAULT_SWEEP_STOP_M,
            points: DEFAULT_SWEEP_POINTS,
        }
    }
}

/// A validated planning scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub categories: Vec<CableCategory>,
    pub lengths_m: Vec<f64>,
    pub compensations: Vec<CompensationMode>,
    pub grid: ToneGrid,
    pub constraints: PowerConstraints,
    pub noise_psd_dbm_hz: f64,
    pub mask_psd_dbm_hz: f64,
    pub mcs: McsProfile,
    pub output_dir: PathBuf,
    pub air: AirLinkSpec,
    pub transparency_threshold_db: f64,
    pub length_sweep: LengthSweep,
}

impl Default for Scenario {
    fn default() -> Self {
        parse_scenario_str("", Path::new(".")).expect("empty scenario is valid")
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

fn finite(key: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(format!("`{key}` = {value} must be finite")))
    }
}

fn positive(key: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("`{key}` = {value} must be > 0")))
    }
}

fn check_length(key: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value <= MAX_MODEL_LENGTH_M {
        Ok(value)
    } else {
        Err(invalid(format!(
            "`{key}` = {value} m is outside the calibrated range (0, {MAX_MODEL_LENGTH_M}] m"
        )))
    }
}

/// Reads and validates a scenario file. Relative `output_dir` values are
/// resolved against the scenario file's directory.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario_str(&text, base)
}

pub fn parse_scenario_str(text: &str, base_dir: &Path) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| invalid(e.message().to_string()))?;

    let categories = match raw.category {
        None => vec![CableCategory::Cat5],
        Some(c) => c
            .into_vec()
            .iter()
            .map(|s| s.parse::<CableCategory>().map_err(|e| invalid(format!("`category`: {e}"))))
            .collect::<Result<Vec<_>>>()?,
    };
    let lengths_m = raw.lengths.map_or(vec![DEFAULT_LENGTH_M], OneOrMany::into_vec);
    let compensations = match raw.compensation {
        None => vec![CompensationMode::None],
        Some(c) => c
            .into_vec()
            .iter()
            .map(|s| s.parse::<CompensationMode>().map_err(|e| invalid(format!("`compensation`: {e}"))))
            .collect::<Result<Vec<_>>>()?,
    };
    if categories.is_empty() {
        return Err(invalid("`category` needs at least one entry"));
    }
    if lengths_m.is_empty() {
        return Err(invalid("`lengths` needs at least one entry"));
    }
    if compensations.is_empty() {
        return Err(invalid("`compensation` needs at least one entry"));
    }
    for (i, &l) in lengths_m.iter().enumerate() {
        check_length(&format!("lengths[{i}]"), l)?;
    }
    for (i, l) in lengths_m.iter().enumerate() {
        if lengths_m[..i].contains(l) {
            return Err(invalid(format!("`lengths` lists {l} m twice")));
        }
    }
    for (i, c) in categories.iter().enumerate() {
        if categories[..i].contains(c) {
            return Err(invalid(format!("`category` lists {c} twice")));
        }
    }
    for (i, c) in compensations.iter().enumerate() {
        if compensations[..i].contains(c) {
            return Err(invalid(format!("`compensation` lists {c} twice")));
        }
    }

    let total_bw = positive("total_bandwidth_hz", raw.total_bandwidth_hz.unwrap_or(DEFAULT_TOTAL_BANDWIDTH_HZ))?;
    let tone_bw = positive("tone_bandwidth_hz", raw.tone_bandwidth_hz.unwrap_or(DEFAULT_TONE_BANDWIDTH_HZ))?;
    if tone_bw > total_bw {
        return Err(invalid(format!(
            "`tone_bandwidth_hz` = {tone_bw} exceeds `total_bandwidth_hz` = {total_bw}"
        )));
    }
    if total_bw > 500e6 {
        return Err(invalid(format!(
            "`total_bandwidth_hz` = {total_bw} exceeds the 500 MHz cable model window"
        )));
    }
    let n_pairs = raw.n_pairs.unwrap_or(DEFAULT_PAIRS);
    if n_pairs == 0 {
        return Err(invalid("`n_pairs` = 0 must be >= 1"));
    }
    let grid = ToneGrid::new(total_bw, tone_bw, n_pairs).map_err(|e| invalid(e.to_string()))?;
    if let Some(&first) = grid.centers_hz().first() {
        if first < 1e6 {
            return Err(invalid(format!(
                "`tone_bandwidth_hz` = {tone_bw} puts the first tone center at {first} Hz, below the 1 MHz model window"
            )));
        }
    }

    let noise = finite("noise_psd_dbm_hz", raw.noise_psd_dbm_hz.unwrap_or(DEFAULT_NOISE_PSD_DBM_HZ))?;
    let mask = finite("mask_psd_dbm_hz", raw.mask_psd_dbm_hz.unwrap_or(DEFAULT_MASK_PSD_DBM_HZ))?;
    if noise >= mask {
        return Err(invalid(format!(
            "`noise_psd_dbm_hz` = {noise} must be below `mask_psd_dbm_hz` = {mask}"
        )));
    }
    let line_total = finite("per_line_total_dbm", raw.per_line_total_dbm.unwrap_or(DEFAULT_LINE_TOTAL_DBM))?;
    let constraints = PowerConstraints::from_mask_psd(line_total, mask, tone_bw).map_err(|e| invalid(e.to_string()))?;

    let gap_db = finite("gap_db", raw.gap_db.unwrap_or(DEFAULT_GAP_DB))?;
    let mcs = match raw.mcs {
        None => McsProfile::from_gap(gap_db),
        Some(list) => {
            let table = list
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let bad = || invalid(format!("`mcs[{i}]` = \"{item}\" is not of the form <bits>:<sinr_db>"));
                    let (b, g) = item.split_once(':').ok_or_else(bad)?;
                    let b = b.trim().parse::<u8>().map_err(|_| bad())?;
                    let g = g.trim().parse::<f64>().map_err(|_| bad())?;
                    Ok((b, g))
                })
                .collect::<Result<Vec<_>>>()?;
            McsProfile::from_table(&table, gap_db)
        }
    }
    .map_err(|e| invalid(format!("`mcs`: {e}")))?;

    let air_snr_db = finite("air_snr_db", raw.air_snr_db.unwrap_or(DEFAULT_AIR_SNR_DB))?;
    let air_bw = positive("air_bandwidth_hz", raw.air_bandwidth_hz.unwrap_or(tone_bw))?;
    let n_antennas = raw.n_antennas.unwrap_or(grid.resource_count().max(1));
    if n_antennas == 0 {
        return Err(invalid("`n_antennas` = 0 must be >= 1"));
    }
    let air = AirLinkSpec::new(raw.n_users.unwrap_or(1), n_antennas, air_snr_db, air_bw)
        .map_err(|e| invalid(e.to_string()))?;
    let threshold = raw.transparency_threshold_db.unwrap_or(DEFAULT_TRANSPARENCY_THRESHOLD_DB);
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(invalid(format!("`transparency_threshold_db` = {threshold} must be >= 0")));
    }

    let sweep = raw.length_sweep.unwrap_or_default();
    let length_sweep = LengthSweep {
        start_m: check_length("length_sweep.start_m", sweep.start_m.unwrap_or(DEFAULT_SWEEP_START_M))?,
        stop_m: check_length("length_sweep.stop_m", sweep.stop_m.unwrap_or(DEFAULT_SWEEP_STOP_M))?,
        points: sweep.points.unwrap_or(DEFAULT_SWEEP_POINTS),
    };
    if length_sweep.stop_m < length_sweep.start_m {
        return Err(invalid(format!(
            "`length_sweep.stop_m` = {} is below `length_sweep.start_m` = {}",
            length_sweep.stop_m, length_sweep.start_m
        )));
    }

    let output_dir = raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let output_dir = if output_dir.is_absolute() {
        output_dir
    } else {
        base_dir.join(output_dir)
    };

    Ok(Scenario {
        categories,
        lengths_m,
        compensations,
        grid,
        constraints,
        noise_psd_dbm_hz: noise,
        mask_psd_dbm_hz: mask,
        mcs,
        output_dir,
        air,
        transparency_threshold_db: threshold,
        length_sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        parse_scenario_str(text, Path::new("/tmp/base"))
    }

    fn message(text: &str) -> String {
        parse(text).unwrap_err().to_string()
    }

    #[test]
    fn empty_file_gives_defaults() {
        let s = parse("").unwrap();
        assert_eq!(s.categories, vec![CableCategory::Cat5]);
        assert_eq!(s.lengths_m, vec![100.0]);
        assert_eq!(s.compensations, vec![CompensationMode::None]);
        assert_eq!(s.constraints.per_line_total_dbm(), 4.0);
        assert!((s.constraints.per_tone_mask_dbm() - (-80.0 + 10.0 * 22e6f64.log10())).abs() < 1e-12);
        assert_eq!(s.mask_psd_dbm_hz, -80.0);
        assert_eq!(s.noise_psd_dbm_hz, -140.0);
        assert_eq!(s.grid.resource_count(), 88);
        assert_eq!(s.mcs, McsProfile::default());
        assert_eq!(s.output_dir, PathBuf::from("/tmp/base/out"));
        assert_eq!(s.air.n_antennas, 88);
        assert_eq!(s.length_sweep.lengths(), (1..=12).map(|i| 25.0 * i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn three_length_sweep() {
        let s = parse("category = \"cat6\"\nlengths = [50, 100, 200]\n").unwrap();
        assert_eq!(s.categories, vec![CableCategory::Cat6]);
        assert_eq!(s.lengths_m, vec![50.0, 100.0, 200.0]);
    }

    #[test]
    fn lists_and_modes() {
        let s = parse(
            "category = [\"cat5\", \"cat7\"]\nlengths = 75.5\ncompensation = [\"none\", \"thp:1.0\", \"ideal\"]\n",
        )
        .unwrap();
        assert_eq!(s.categories.len(), 2);
        assert_eq!(s.lengths_m, vec![75.5]);
        assert_eq!(s.compensations[1], CompensationMode::ThpLoss(1.0));
    }

    #[test]
    fn negative_length_rejected() {
        let m = message("lengths = [-5]");
        assert!(m.contains("lengths[0]") && m.contains("-5") && m.contains("500"), "{m}");
    }

    #[test]
    fn unknown_key_is_named() {
        let m = message("lenghts = [50]");
        assert!(m.contains("lenghts"), "{m}");
        let m = message("[length_sweep]\nstep = 3\n");
        assert!(m.contains("step"), "{m}");
    }

    #[test]
    fn out_of_range_values_are_named() {
        assert!(message("n_pairs = 0").contains("n_pairs"));
        assert!(message("noise_psd_dbm_hz = -70").contains("noise_psd_dbm_hz"));
        assert!(message("tone_bandwidth_hz = 0").contains("tone_bandwidth_hz"));
        assert!(message("total_bandwidth_hz = 1e9").contains("500 MHz"));
        assert!(message("tone_bandwidth_hz = 1e6").contains("1 MHz"));
        assert!(message("category = \"cat9\"").contains("cat9"));
        assert!(message("compensation = \"thp:-2\"").contains("compensation"));
        assert!(message("lengths = [50, 50]").contains("twice"));
        assert!(message("transparency_threshold_db = -1").contains("transparency_threshold_db"));
        assert!(message("[length_sweep]\nstart_m = 200\nstop_m = 100\n").contains("stop_m"));
        assert!(message("mcs = [\"2-10\"]").contains("mcs[0]"));
        assert!(message("mcs = [\"4:20\", \"2:10\"]").contains("mcs"));
    }

    #[test]
    fn explicit_mcs_table() {
        let s = parse("mcs = [\"2:10\", \"4:17\"]").unwrap();
        assert_eq!(s.mcs.max_bits(), 4);
        assert_eq!(s.mcs.target_sinr_db(4).unwrap(), 17.0);
    }

    #[test]
    fn sweep_spacing() {
        let one = LengthSweep { start_m: 40.0, stop_m: 80.0, points: 1 };
        assert_eq!(one.lengths(), vec![40.0]);
        let three = LengthSweep { start_m: 40.0, stop_m: 80.0, points: 3 };
        assert_eq!(three.lengths(), vec![40.0, 60.0, 80.0]);
        assert!(LengthSweep { points: 0, ..three }.lengths().is_empty());
    }
}
