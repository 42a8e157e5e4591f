//! Space-frequency resource grid and modulation profile.
//!
//! The cable spectrum is cut into contiguous FDM bins of equal width, one
//! radio channel per bin and per pair. Each bin carries one of a small set of
//! square QAM constellations whose required SINR follows the SNR-gap
//! approximation `γ(b) = Γ·(2^b − 1)`.

use crate::error::{Error, Result};

/// Default cable spectrum considered for transport, in Hz.
pub const DEFAULT_TOTAL_BANDWIDTH_HZ: f64 = 500e6;
/// One 20 MHz LTE carrier plus 10% guard band.
pub const DEFAULT_TONE_BANDWIDTH_HZ: f64 = 22e6;
pub const DEFAULT_PAIRS: usize = 4;
/// SNR gap of the default constellation thresholds, tuned together with the
/// bundled cable calibration.
pub const DEFAULT_GAP_DB: f64 = 8.5;
/// 256-QAM, the largest constellation of the air interface.
pub const MAX_BITS: u8 = 8;

/// FDM grid of tones over `n_pairs` twisted pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneGrid {
    n_pairs: usize,
    tone_bandwidth_hz: f64,
    total_bandwidth_hz: f64,
    centers_hz: Vec<f64>,
}

impl ToneGrid {
    /// Builds `⌊total / tone⌋` contiguous tones starting at DC. Spectrum left
    /// over above the last full tone is unused.
    pub fn new(total_bandwidth_hz: f64, tone_bandwidth_hz: f64, n_pairs: usize) -> Result<Self> {
        if !(tone_bandwidth_hz.is_finite() && tone_bandwidth_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tone bandwidth must be positive, got {tone_bandwidth_hz} Hz"
            )));
        }
        if !(total_bandwidth_hz.is_finite() && total_bandwidth_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "total bandwidth must be positive, got {total_bandwidth_hz} Hz"
            )));
        }
        if n_pairs == 0 {
            return Err(Error::InvalidArgument("cable needs at least one pair".into()));
        }
        let n_tones = (total_bandwidth_hz / tone_bandwidth_hz).floor() as usize;
        let centers_hz = (0..n_tones)
            .map(|k| (k as f64 + 0.5) * tone_bandwidth_hz)
            .collect();
        Ok(ToneGrid {
            n_pairs,
            tone_bandwidth_hz,
            total_bandwidth_hz,
            centers_hz,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_tones(&self) -> usize {
        self.centers_hz.len()
    }

    pub fn tone_bandwidth_hz(&self) -> f64 {
        self.tone_bandwidth_hz
    }

    pub fn total_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Number of (pair, tone) resources.
    pub fn resource_count(&self) -> usize {
        self.n_pairs * self.n_tones()
    }
}

impl Default for ToneGrid {
    fn default() -> Self {
        ToneGrid::new(
            DEFAULT_TOTAL_BANDWIDTH_HZ,
            DEFAULT_TONE_BANDWIDTH_HZ,
            DEFAULT_PAIRS,
        )
        .expect("default grid parameters are valid")
    }
}

/// One constellation choice: bits per symbol and the SINR it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub bits: u8,
    pub target_sinr_db: f64,
}

impl McsEntry {
    /// Required SINR as a linear ratio; zero for the "off" entry.
    pub fn target_sinr_linear(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            10f64.powf(self.target_sinr_db / 10.0)
        }
    }
}

/// Ordered set of constellations available per resource, always starting
/// with the "off" entry (`b = 0`, `γ = −∞`).
#[derive(Debug, Clone, PartialEq)]
pub struct McsProfile {
    entries: Vec<McsEntry>,
    gap_db: f64,
}

impl McsProfile {
    /// QPSK through 256-QAM with thresholds from the SNR-gap formula.
    pub fn from_gap(gap_db: f64) -> Result<Self> {
        if !gap_db.is_finite() {
            return Err(Error::InvalidArgument(format!("SNR gap must be finite, got {gap_db}")));
        }
        let entries = (0..=MAX_BITS)
            .step_by(2)
            .map(|bits| McsEntry {
                bits,
                target_sinr_db: gap_sinr_db(bits, gap_db),
            })
            .collect();
        Ok(McsProfile { entries, gap_db })
    }

    /// Explicit `(bits, γ_dB)` table. The "off" entry is added if missing.
    /// `gap_db` is kept for reporting only.
    pub fn from_table(table: &[(u8, f64)], gap_db: f64) -> Result<Self> {
        let mut entries = vec![McsEntry {
            bits: 0,
            target_sinr_db: f64::NEG_INFINITY,
        }];
        for &(bits, target_sinr_db) in table {
            if bits == 0 {
                continue;
            }
            if bits > MAX_BITS || bits % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "constellation with {bits} bits/symbol not supported (allowed: 2, 4, 6, 8)"
                )));
            }
            if !target_sinr_db.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "target SINR for {bits} bits must be finite, got {target_sinr_db}"
                )));
            }
            let last = entries.last().expect("off entry present");
            if bits <= last.bits || target_sinr_db <= last.target_sinr_db {
                return Err(Error::InvalidArgument(format!(
                    "MCS table must be strictly increasing in bits and SINR at {bits}:{target_sinr_db}"
                )));
            }
            entries.push(McsEntry {
                bits,
                target_sinr_db,
            });
        }
        Ok(McsProfile { entries, gap_db })
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn gap_db(&self) -> f64 {
        self.gap_db
    }

    pub fn max_bits(&self) -> u8 {
        self.entries.last().map_or(0, |e| e.bits)
    }

    pub fn entry(&self, bits: u8) -> Result<&McsEntry> {
        self.entries
            .iter()
            .find(|e| e.bits == bits)
            .ok_or_else(|| Error::InvalidArgument(format!("{bits} bits/symbol not in MCS profile")))
    }

    pub fn target_sinr_db(&self, bits: u8) -> Result<f64> {
        self.entry(bits).map(|e| e.target_sinr_db)
    }
}

impl Default for McsProfile {
    fn default() -> Self {
        McsProfile::from_gap(DEFAULT_GAP_DB).expect("default gap is finite")
    }
}

/// `10·log10(2^b − 1) + Γ_dB`, or `−∞` for `b = 0`.
pub fn gap_sinr_db(bits: u8, gap_db: f64) -> f64 {
    if bits == 0 {
        f64::NEG_INFINITY
    } else {
        10.0 * ((1u32 << bits) as f64 - 1.0).log10() + gap_db
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_88_resources() {
        let grid = ToneGrid::default();
        assert_eq!(grid.n_tones(), 22);
        assert_eq!(grid.resource_count(), 88);
        assert_eq!(grid.centers_hz()[0], 11e6);
        assert_eq!(grid.centers_hz()[21], 473e6);
    }

    #[test]
    fn grid_floor_edges() {
        assert_eq!(ToneGrid::new(22e6, 22e6, 1).unwrap().n_tones(), 1);
        let empty = ToneGrid::new(21e6, 22e6, 4).unwrap();
        assert_eq!(empty.n_tones(), 0);
        assert_eq!(empty.resource_count(), 0);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(ToneGrid::new(500e6, 0.0, 4).is_err());
        assert!(ToneGrid::new(-1.0, 22e6, 4).is_err());
        assert!(ToneGrid::new(500e6, 22e6, 0).is_err());
    }

    #[test]
    fn gap_thresholds() {
        let p = McsProfile::from_gap(6.0).unwrap();
        assert_eq!(p.target_sinr_db(0).unwrap(), f64::NEG_INFINITY);
        let qpsk = p.target_sinr_db(2).unwrap();
        assert!((qpsk - (10.0 * 3f64.log10() + 6.0)).abs() < 1e-12);
        assert!((qpsk - 10.77).abs() < 5e-3);
        let d = p.target_sinr_db(8).unwrap() - p.target_sinr_db(6).unwrap();
        assert!((d - 6.07).abs() < 5e-3);
        let d0 = gap_sinr_db(8, 0.0) - gap_sinr_db(6, 0.0);
        assert!((d - d0).abs() < 1e-12);
        assert!(p.target_sinr_db(3).is_err());
        assert_eq!(p.max_bits(), 8);
    }

    #[test]
    fn gap_thresholds_increasing_and_convex() {
        let p = McsProfile::default();
        let db: Vec<f64> = (1..5).map(|i| p.entries()[i].target_sinr_db).collect();
        let lin: Vec<f64> = (1..5).map(|i| p.entries()[i].target_sinr_linear()).collect();
        for w in db.windows(2) {
            assert!(w[1] > w[0]);
        }
        // Convex on the linear scale; the dB steps shrink towards 20·log10(2).
        for w in lin.windows(3) {
            assert!(w[2] - w[1] > w[1] - w[0]);
        }
        for w in db.windows(3) {
            assert!(w[2] - w[1] < w[1] - w[0]);
            assert!(w[2] - w[1] > 20.0 * 2f64.log10());
        }
    }

    #[test]
    fn table_profile_validation() {
        let p = McsProfile::from_table(&[(2, 10.0), (4, 17.0)], 6.0).unwrap();
        assert_eq!(p.entries().len(), 3);
        assert_eq!(p.max_bits(), 4);
        assert!(McsProfile::from_table(&[(4, 17.0), (2, 10.0)], 6.0).is_err());
        assert!(McsProfile::from_table(&[(2, 17.0), (4, 10.0)], 6.0).is_err());
        assert!(McsProfile::from_table(&[(10, 40.0)], 6.0).is_err());
        assert!(McsProfile::from_table(&[(3, 10.0)], 6.0).is_err());
    }
}
