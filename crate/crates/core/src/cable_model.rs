//! Frequency and length dependent models of Cat-5/6/7 LAN cables.
//!
//! All four pairs are treated as identical: every pair sees the same
//! insertion loss and every ordered pair couples with the same FEXT loss.
//! Matrices hold power gains `|h|²` only.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::band_plan::ToneGrid;
use crate::error::{Error, Result};

pub const MIN_MODEL_FREQ_MHZ: f64 = 1.0;
pub const MAX_MODEL_FREQ_MHZ: f64 = 500.0;
pub const MAX_MODEL_LENGTH_M: f64 = 500.0;
pub const DEFAULT_NOISE_PSD_DBM_HZ: f64 = -140.0;
pub const DEFAULT_MASK_PSD_DBM_HZ: f64 = -80.0;
/// Environment variable naming an alternative calibration file.
pub const CALIBRATION_ENV: &str = "ROC_CALIBRATION";

const REF_FREQ_MHZ: f64 = 100.0;
const REF_LENGTH_M: f64 = 100.0;
const DEFAULT_CALIBRATION: &str = include_str!("../calibration/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CableCategory {
    Cat5,
    Cat6,
    Cat7,
}

impl CableCategory {
    pub const ALL: [CableCategory; 3] = [CableCategory::Cat5, CableCategory::Cat6, CableCategory::Cat7];

    pub fn as_str(&self) -> &'static str {
        match self {
            CableCategory::Cat5 => "cat5",
            CableCategory::Cat6 => "cat6",
            CableCategory::Cat7 => "cat7",
        }
    }
}

impl fmt::Display for CableCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CableCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "cat5" | "cat5e" => Ok(CableCategory::Cat5),
            "cat6" | "cat6a" => Ok(CableCategory::Cat6),
            "cat7" => Ok(CableCategory::Cat7),
            other => Err(Error::InvalidArgument(format!(
                "unknown cable category `{other}` (expected cat5, cat6 or cat7)"
            ))),
        }
    }
}

/// Per-category model constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableConstants {
    /// Insertion-loss coefficients (dB per 100 m) for the `√f`, `f` and `1/√f` terms.
    pub il_coeffs: [f64; 3],
    /// Equal-level FEXT loss at 100 MHz over 100 m, dB.
    pub elfext_ref_db: f64,
}

impl CableConstants {
    /// Checks the constants against the model invariants; `key` prefixes
    /// error messages (e.g. `cat5`).
    fn validate(&self, key: &str) -> Result<()> {
        for (name, k) in ["k1", "k2", "k3"].iter().zip(self.il_coeffs) {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::Calibration {
                    key: format!("{key}.{name}"),
                    reason: format!("must be a finite nonnegative number, got {k}"),
                });
            }
        }
        // dIL/df > 0 on (1, ∞) iff k1·f + 2·k2·f^1.5 > k3, and the left side grows with f.
        let [k1, k2, k3] = self.il_coeffs;
        if k1 + 2.0 * k2 < k3 || (k1 == 0.0 && k2 == 0.0) {
            return Err(Error::Calibration {
                key: format!("{key}.k3"),
                reason: format!(
                    "insertion loss must increase with frequency above 1 MHz (needs k1 + 2*k2 >= k3, got {k1} + 2*{k2} < {k3})"
                ),
            });
        }
        // FEXT must stay below the direct path across the whole validity window.
        let floor = 20.0 * (MAX_MODEL_FREQ_MHZ / REF_FREQ_MHZ).log10()
            + 10.0 * (MAX_MODEL_LENGTH_M / REF_LENGTH_M).log10();
        if self.elfext_ref_db.is_nan() || self.elfext_ref_db <= floor {
            return Err(Error::Calibration {
                key: format!("{key}.elfext_ref_db"),
                reason: format!("must exceed {floor:.2} dB, got {}", self.elfext_ref_db),
            });
        }
        Ok(())
    }
}

/// Constants for every cable category.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    cat5: CableConstants,
    cat6: CableConstants,
    cat7: CableConstants,
}

impl Calibration {
    /// Parses a calibration file with one `[catN]` table per category, each
    /// holding `k1`, `k2`, `k3` and `elfext_ref_db`.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Calibration {
            key: "<file>".into(),
            reason: e.message().to_string(),
        })?;
        if let Some(key) = table
            .keys()
            .find(|k| k.parse::<CableCategory>().map(|c| c.as_str() != k.as_str()).unwrap_or(true))
        {
            return Err(Error::Calibration {
                key: key.clone(),
                reason: "unknown category (expected cat5, cat6, cat7)".into(),
            });
        }
        let record = |cat: CableCategory| -> Result<CableConstants> {
            let name = cat.as_str();
            let rec = table
                .get(name)
                .ok_or_else(|| Error::Calibration {
                    key: name.into(),
                    reason: "missing record".into(),
                })?
                .as_table()
                .ok_or_else(|| Error::Calibration {
                    key: name.into(),
                    reason: "expected a table of constants".into(),
                })?;
            const FIELDS: [&str; 4] = ["k1", "k2", "k3", "elfext_ref_db"];
            if let Some(k) = rec.keys().find(|k| !FIELDS.contains(&k.as_str())) {
                return Err(Error::Calibration {
                    key: format!("{name}.{k}"),
                    reason: "unknown key".into(),
                });
            }
            let num = |field: &str| -> Result<f64> {
                let v = rec.get(field).ok_or_else(|| Error::Calibration {
                    key: format!("{name}.{field}"),
                    reason: "missing value".into(),
                })?;
                v.as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| Error::Calibration {
                        key: format!("{name}.{field}"),
                        reason: format!("expected a number, got {v}"),
                    })
            };
            let constants = CableConstants {
                il_coeffs: [num("k1")?, num("k2")?, num("k3")?],
                elfext_ref_db: num("elfext_ref_db")?,
            };
            constants.validate(name)?;
            Ok(constants)
        };
        Ok(Calibration {
            cat5: record(CableCategory::Cat5)?,
            cat6: record(CableCategory::Cat6)?,
            cat7: record(CableCategory::Cat7)?,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Calibration::parse(&text)
    }

    /// The calibration file named by `ROC_CALIBRATION`, or the bundled default.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CALIBRATION_ENV) {
            Some(path) if !path.is_empty() => Calibration::from_file(Path::new(&path)),
            _ => Ok(Calibration::default()),
        }
    }

    pub fn constants(&self, category: CableCategory) -> &CableConstants {
        match category {
            CableCategory::Cat5 => &self.cat5,
            CableCategory::Cat6 => &self.cat6,
            CableCategory::Cat7 => &self.cat7,
        }
    }

    pub fn set_constants(&mut self, category: CableCategory, constants: CableConstants) -> Result<()> {
        constants.validate(category.as_str())?;
        match category {
            CableCategory::Cat5 => self.cat5 = constants,
            CableCategory::Cat6 => self.cat6 = constants,
            CableCategory::Cat7 => self.cat7 = constants,
        }
        Ok(())
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::parse(DEFAULT_CALIBRATION).expect("bundled calibration is valid")
    }
}

/// A cable of a given category and length together with its noise
/// environment.
#[derive(Debug, Clone, PartialEq)]
pub struct CableSpec {
    category: CableCategory,
    length_m: f64,
    il_coeffs: [f64; 3],
    elfext_ref_db: f64,
    noise_psd_dbm_hz: f64,
    mask_psd_dbm_hz: f64,
}

impl CableSpec {
    pub fn new(category: CableCategory, length_m: f64, calibration: &Calibration) -> Result<Self> {
        if !(length_m > 0.0 && length_m <= MAX_MODEL_LENGTH_M) {
            return Err(Error::InvalidArgument(format!(
                "cable length {length_m} m outside (0, {MAX_MODEL_LENGTH_M}] m"
            )));
        }
        let c = calibration.constants(category);
        Ok(CableSpec {
            category,
            length_m,
            il_coeffs: c.il_coeffs,
            elfext_ref_db: c.elfext_ref_db,
            noise_psd_dbm_hz: DEFAULT_NOISE_PSD_DBM_HZ,
            mask_psd_dbm_hz: DEFAULT_MASK_PSD_DBM_HZ,
        })
    }

    pub fn with_psd(mut self, noise_psd_dbm_hz: f64, mask_psd_dbm_hz: f64) -> Result<Self> {
        if !(noise_psd_dbm_hz.is_finite() && mask_psd_dbm_hz.is_finite()) {
            return Err(Error::InvalidArgument("PSD levels must be finite".into()));
        }
        if noise_psd_dbm_hz >= mask_psd_dbm_hz {
            return Err(Error::InvalidArgument(format!(
                "noise PSD {noise_psd_dbm_hz} dBm/Hz must lie below the mask {mask_psd_dbm_hz} dBm/Hz"
            )));
        }
        self.noise_psd_dbm_hz = noise_psd_dbm_hz;
        self.mask_psd_dbm_hz = mask_psd_dbm_hz;
        Ok(self)
    }

    /// Overrides the ELFEXT reference. `+∞` removes crosstalk entirely.
    pub fn with_elfext_ref_db(mut self, elfext_ref_db: f64) -> Self {
        self.elfext_ref_db = elfext_ref_db;
        self
    }

    pub fn with_length(mut self, length_m: f64) -> Result<Self> {
        if !(length_m > 0.0 && length_m <= MAX_MODEL_LENGTH_M) {
            return Err(Error::InvalidArgument(format!(
                "cable length {length_m} m outside (0, {MAX_MODEL_LENGTH_M}] m"
            )));
        }
        self.length_m = length_m;
        Ok(self)
    }

    pub fn category(&self) -> CableCategory {
        self.category
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn il_coeffs(&self) -> [f64; 3] {
        self.il_coeffs
    }

    pub fn elfext_ref_db(&self) -> f64 {
        self.elfext_ref_db
    }

    pub fn noise_psd_dbm_hz(&self) -> f64 {
        self.noise_psd_dbm_hz
    }

    pub fn mask_psd_dbm_hz(&self) -> f64 {
        self.mask_psd_dbm_hz
    }
}

fn check_frequency(f_mhz: f64) -> Result<()> {
    if (MIN_MODEL_FREQ_MHZ..=MAX_MODEL_FREQ_MHZ).contains(&f_mhz) {
        Ok(())
    } else {
        Err(Error::OutOfValidity {
            f_mhz,
            min_mhz: MIN_MODEL_FREQ_MHZ,
            max_mhz: MAX_MODEL_FREQ_MHZ,
        })
    }
}

/// Direct-path attenuation in dB.
pub fn insertion_loss_db(spec: &CableSpec, f_mhz: f64) -> Result<f64> {
    check_frequency(f_mhz)?;
    let [k1, k2, k3] = spec.il_coeffs;
    let root = f_mhz.sqrt();
    Ok((k1 * root + k2 * f_mhz + k3 / root) * (spec.length_m / REF_LENGTH_M))
}

/// Equal-level FEXT loss: 20 dB/decade in frequency, 10 dB/decade in length.
pub fn elfext_db(spec: &CableSpec, f_mhz: f64) -> Result<f64> {
    check_frequency(f_mhz)?;
    Ok(spec.elfext_ref_db
        - 20.0 * (f_mhz / REF_FREQ_MHZ).log10()
        - 10.0 * (spec.length_m / REF_LENGTH_M).log10())
}

/// Pair-to-pair FEXT coupling loss in dB (IL plus ELFEXT).
pub fn fext_coupling_db(spec: &CableSpec, f_mhz: f64) -> Result<f64> {
    Ok(insertion_loss_db(spec, f_mhz)? + elfext_db(spec, f_mhz)?)
}

/// Cable gains for one FDM tone.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneChannel {
    pub center_hz: f64,
    /// `gains[(n, m)] = |h^{n,m}|²`, coupling from pair `m` into pair `n`.
    pub gains: DMatrix<f64>,
    /// Noise power per pair, watts.
    pub noise_w: DVector<f64>,
}

impl ToneChannel {
    pub fn n_pairs(&self) -> usize {
        self.gains.nrows()
    }
}

/// Block-diagonal cable channel, one `N_c × N_c` block per tone.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrixSet {
    pub tone_bandwidth_hz: f64,
    pub tones: Vec<ToneChannel>,
}

impl ChannelMatrixSet {
    pub fn n_tones(&self) -> usize {
        self.tones.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.tones.first().map_or(0, ToneChannel::n_pairs)
    }

    /// SINR of pair 0 on every tone when all pairs transmit `power_w`.
    pub fn uniform_power_sinr(&self, power_w: f64) -> Vec<f64> {
        self.tones
            .iter()
            .map(|t| {
                let p = DVector::from_element(t.n_pairs(), power_w);
                crate::osb_alloc::sinr(&t.gains, &p, &t.noise_w, 0)
            })
            .collect()
    }
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise power in watts collected over `bandwidth_hz` at `psd_dbm_hz`.
pub fn noise_power_w(psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    db_to_linear(psd_dbm_hz + 10.0 * bandwidth_hz.log10() - 30.0)
}

/// Evaluates the cable model at every tone center of `grid`.
pub fn build_channel_matrices(spec: &CableSpec, grid: &ToneGrid) -> Result<ChannelMatrixSet> {
    let n = grid.n_pairs();
    let noise = noise_power_w(spec.noise_psd_dbm_hz, grid.tone_bandwidth_hz());
    let tones = grid
        .centers_hz()
        .iter()
        .map(|&center_hz| {
            let f_mhz = center_hz / 1e6;
            let direct = db_to_linear(-insertion_loss_db(spec, f_mhz)?);
            let coupled = db_to_linear(-fext_coupling_db(spec, f_mhz)?);
            let gains = DMatrix::from_fn(n, n, |r, c| if r == c { direct } else { coupled });
            Ok(ToneChannel {
                center_hz,
                gains,
                noise_w: DVector::from_element(n, noise),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelMatrixSet {
        tone_bandwidth_hz: grid.tone_bandwidth_hz(),
        tones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat5(length_m: f64) -> CableSpec {
        CableSpec::new(CableCategory::Cat5, length_m, &Calibration::default()).unwrap()
    }

    #[test]
    fn cat5_limit_line_at_100mhz() {
        // 1.967·10 + 0.023·100 + 0.050/10
        let il = insertion_loss_db(&cat5(100.0), 100.0).unwrap();
        assert!((il - 21.975).abs() < 1e-12);
        assert!((il - 22.0).abs() < 0.05);
    }

    #[test]
    fn insertion_loss_scales_with_length() {
        for f in [1.0, 11.0, 100.0, 473.0, 500.0] {
            let a = insertion_loss_db(&cat5(100.0), f).unwrap();
            let b = insertion_loss_db(&cat5(200.0), f).unwrap();
            assert!((b - 2.0 * a).abs() < 1e-12);
            let tiny = insertion_loss_db(&cat5(1e-9), f).unwrap();
            assert!(tiny < 1e-9);
        }
    }

    #[test]
    fn frequency_window_enforced() {
        let s = cat5(100.0);
        assert!(matches!(insertion_loss_db(&s, 0.5), Err(Error::OutOfValidity { .. })));
        assert!(matches!(fext_coupling_db(&s, 501.0), Err(Error::OutOfValidity { .. })));
        assert!(insertion_loss_db(&s, 1.0).is_ok());
        assert!(insertion_loss_db(&s, 500.0).is_ok());
    }

    #[test]
    fn elfext_slopes() {
        let s = cat5(100.0);
        let d = elfext_db(&s, 50.0).unwrap() - elfext_db(&s, 100.0).unwrap();
        assert!((d - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((d - 6.0206).abs() < 1e-4);
        let at_ref = fext_coupling_db(&s, 100.0).unwrap();
        let expected = s.elfext_ref_db() + insertion_loss_db(&s, 100.0).unwrap();
        assert!((at_ref - expected).abs() < 1e-12);
    }

    #[test]
    fn coupling_loss_ordered_by_category() {
        let cal = Calibration::default();
        for &l in &[1.0, 25.0, 50.0, 100.0, 200.0, 300.0, 500.0] {
            for f in [1.0, 11.0, 100.0, 250.0, 473.0, 500.0] {
                let c = |cat| fext_coupling_db(&CableSpec::new(cat, l, &cal).unwrap(), f).unwrap();
                let (c5, c6, c7) = (c(CableCategory::Cat5), c(CableCategory::Cat6), c(CableCategory::Cat7));
                assert!(c7 > c6 && c6 > c5, "f={f} L={l}: {c5} {c6} {c7}");
            }
        }
    }

    #[test]
    fn noise_power_per_tone() {
        let dbm = 10.0 * (noise_power_w(-140.0, 22e6) * 1e3).log10();
        assert!((dbm - (-140.0 + 10.0 * 22e6f64.log10())).abs() < 1e-9);
        assert!((dbm + 66.58).abs() < 5e-3);
    }

    #[test]
    fn channel_set_shape_and_entries() {
        let grid = ToneGrid::default();
        let set = build_channel_matrices(&cat5(100.0), &grid).unwrap();
        assert_eq!(set.n_tones(), 22);
        for t in &set.tones {
            assert_eq!(t.gains.shape(), (4, 4));
            let min_diag = (0..4).map(|i| t.gains[(i, i)]).fold(f64::INFINITY, f64::min);
            for r in 0..4 {
                for c in 0..4 {
                    let g = t.gains[(r, c)];
                    assert!(g.is_finite() && g >= 0.0);
                    if r == c {
                        assert!(g > 0.0 && g <= 1.0);
                    } else {
                        assert!(g < min_diag);
                    }
                }
            }
        }
    }

    #[test]
    fn infinite_elfext_gives_diagonal_channel() {
        let spec = cat5(100.0).with_elfext_ref_db(f64::INFINITY);
        let set = build_channel_matrices(&spec, &ToneGrid::default()).unwrap();
        for t in &set.tones {
            for r in 0..4 {
                for c in 0..4 {
                    if r != c {
                        assert_eq!(t.gains[(r, c)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn out_of_window_grid_propagates() {
        let grid = ToneGrid::new(10e6, 1e6, 4).unwrap();
        assert!(build_channel_matrices(&cat5(100.0), &grid).is_err());
    }

    #[test]
    fn spec_rejects_bad_inputs() {
        let cal = Calibration::default();
        assert!(CableSpec::new(CableCategory::Cat6, 0.0, &cal).is_err());
        assert!(CableSpec::new(CableCategory::Cat6, -5.0, &cal).is_err());
        assert!(CableSpec::new(CableCategory::Cat6, 600.0, &cal).is_err());
        assert!(cat5(100.0).with_psd(-80.0, -140.0).is_err());
    }

    #[test]
    fn calibration_errors_name_the_key() {
        let good = DEFAULT_CALIBRATION;
        let missing = good.replacen("k2 = 0.023\n", "", 1);
        match Calibration::parse(&missing) {
            Err(Error::Calibration { key, .. }) => assert_eq!(key, "cat5.k2"),
            other => panic!("unexpected {other:?}"),
        }
        let typo = good.replacen("k3 = 0.050", "k3 = \"x\"", 1);
        match Calibration::parse(&typo) {
            Err(Error::Calibration { key, .. }) => assert_eq!(key, "cat5.k3"),
            other => panic!("unexpected {other:?}"),
        }
        let extra = format!("{good}\n[cat9]\nk1 = 1.0\n");
        match Calibration::parse(&extra) {
            Err(Error::Calibration { key, .. }) => assert_eq!(key, "cat9"),
            other => panic!("unexpected {other:?}"),
        }
        let negative = good.replacen("k1 = 1.808", "k1 = -1.0", 1);
        match Calibration::parse(&negative) {
            Err(Error::Calibration { key, .. }) => assert_eq!(key, "cat6.k1"),
            other => panic!("unexpected {other:?}"),
        }
        let stray = good.replacen("elfext_ref_db = 114.0", "elfext_ref_db = 114.0\nnext_db = 3", 1);
        match Calibration::parse(&stray) {
            Err(Error::Calibration { key, .. }) => assert_eq!(key, "cat7.next_db"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn category_parsing() {
        assert_eq!("Cat-5".parse::<CableCategory>().unwrap(), CableCategory::Cat5);
        assert_eq!("cat7".parse::<CableCategory>().unwrap(), CableCategory::Cat7);
        assert!("cat8".parse::<CableCategory>().is_err());
    }
}
