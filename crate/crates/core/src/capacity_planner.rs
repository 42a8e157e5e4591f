//! Fronthaul transport capability of an allocated cable.
//!
//! Turns a [`PowerAllocation`] into the number of radio channels the cable
//! can carry, assigns antennas to (pair, tone) resources and estimates how
//! much each radio signal is degraded by the copper hop.

use crate::band_plan::ToneGrid;
use crate::cable_model::ChannelMatrixSet;
use crate::error::{Error, Result};
use crate::osb_alloc::{sinr, PowerAllocation};

pub const DEFAULT_AIR_SNR_DB: f64 = 20.0;
/// Largest tolerated SINR loss over the cable, dB.
pub const DEFAULT_TRANSPARENCY_THRESHOLD_DB: f64 = 3.0;

/// Radio side of the link, collapsed to a per-antenna SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirLinkSpec {
    pub n_users: usize,
    pub n_antennas: usize,
    pub air_snr_db: f64,
    pub air_bandwidth_hz: f64,
}

impl AirLinkSpec {
    pub fn new(n_users: usize, n_antennas: usize, air_snr_db: f64, air_bandwidth_hz: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::InvalidArgument("at least one antenna is required".into()));
        }
        if !air_snr_db.is_finite() {
            return Err(Error::InvalidArgument(format!("air SNR must be finite, got {air_snr_db} dB")));
        }
        if !(air_bandwidth_hz.is_finite() && air_bandwidth_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "air bandwidth must be positive, got {air_bandwidth_hz} Hz"
            )));
        }
        Ok(AirLinkSpec {
            n_users,
            n_antennas,
            air_snr_db,
            air_bandwidth_hz,
        })
    }

    pub fn air_snr_linear(&self) -> f64 {
        10f64.powf(self.air_snr_db / 10.0)
    }
}

/// Antenna `antenna` is carried on `pair` at tone index `tone`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntennaAssignment {
    pub antenna: usize,
    pub pair: usize,
    pub tone: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerReport {
    /// `B_{c,ℓ}` per pair, Hz.
    pub useful_bandwidth_hz: Vec<f64>,
    pub n_antennas_max: usize,
    pub line_rate_bps: Vec<f64>,
    pub line_power_dbm: Vec<f64>,
    /// Widest spectrum prefix where every pair carries the top constellation.
    pub qam256_bandwidth_hz: f64,
    pub mapping: Vec<AntennaAssignment>,
    /// Cable-induced SINR loss per mapped antenna, dB.
    pub degradation_db: Vec<f64>,
}

impl PlannerReport {
    /// Mapped antennas whose degradation stays within `threshold_db`.
    pub fn transparent_antennas(&self, threshold_db: f64) -> usize {
        self.degradation_db.iter().filter(|&&d| d <= threshold_db).count()
    }

    pub fn worst_degradation_db(&self) -> Option<f64> {
        self.degradation_db.iter().copied().reduce(f64::max)
    }
}

fn check_consistent(alloc: &PowerAllocation, grid: &ToneGrid) -> Result<()> {
    if alloc.n_tones() != grid.n_tones() || (alloc.n_tones() > 0 && alloc.n_pairs() != grid.n_pairs()) {
        return Err(Error::InvalidArgument(format!(
            "allocation is {}x{} but grid is {}x{}",
            alloc.n_tones(),
            alloc.n_pairs(),
            grid.n_tones(),
            grid.n_pairs()
        )));
    }
    Ok(())
}

/// Bandwidth of the tones carrying a nonzero constellation on `pair`.
pub fn useful_bandwidth(alloc: &PowerAllocation, grid: &ToneGrid, pair: usize) -> Result<f64> {
    check_consistent(alloc, grid)?;
    if pair >= grid.n_pairs() {
        return Err(Error::InvalidArgument(format!(
            "pair {pair} out of range (cable has {})",
            grid.n_pairs()
        )));
    }
    let active = alloc.bits.iter().filter(|b| b[pair] > 0).count();
    Ok(grid.tone_bandwidth_hz() * active as f64)
}

/// `Σ_ℓ ⌊B_{c,ℓ} / B_a⌋`.
pub fn max_antennas(useful_bandwidth_hz: &[f64], air_bandwidth_hz: f64) -> Result<usize> {
    if !(air_bandwidth_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "air bandwidth must be positive, got {air_bandwidth_hz} Hz"
        )));
    }
    // Nudge by a few ulps so that 44 MHz / 22 MHz is not floored to 1.
    Ok(useful_bandwidth_hz
        .iter()
        .map(|b| ((b / air_bandwidth_hz) * (1.0 + 4.0 * f64::EPSILON)).floor() as usize)
        .sum())
}

/// Width of the lowest run of tones on which every pair carries `top_bits`.
pub fn full_rate_bandwidth(alloc: &PowerAllocation, grid: &ToneGrid, top_bits: u8) -> f64 {
    let run = alloc
        .bits
        .iter()
        .take_while(|tone| !tone.is_empty() && tone.iter().all(|&b| b == top_bits))
        .count();
    grid.tone_bandwidth_hz() * run as f64
}

/// Greedy assignment: best constellation first, then lower frequency, then
/// lower pair index.
pub fn map_antennas(n_antennas: usize, alloc: &PowerAllocation, grid: &ToneGrid, air_bandwidth_hz: f64) -> Result<Vec<AntennaAssignment>> {
    check_consistent(alloc, grid)?;
    let useful = (0..grid.n_pairs())
        .map(|p| useful_bandwidth(alloc, grid, p))
        .collect::<Result<Vec<_>>>()?;
    let mut resources: Vec<(u8, usize, usize)> = alloc
        .bits
        .iter()
        .enumerate()
        .flat_map(|(k, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &b)| b > 0)
                .map(move |(n, &b)| (b, k, n))
        })
        .collect();
    let available = max_antennas(&useful, air_bandwidth_hz)?.min(resources.len());
    if n_antennas > available {
        return Err(Error::CapacityExceeded {
            requested: n_antennas,
            available,
        });
    }
    resources.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(resources
        .into_iter()
        .take(n_antennas)
        .enumerate()
        .map(|(antenna, (_, tone, pair))| AntennaAssignment { antenna, pair, tone })
        .collect())
}

/// Amplify-and-forward cascade `γ_a·γ_c / (γ_a + γ_c + 1)`.
pub fn end_to_end_sinr(air: f64, cable: f64) -> f64 {
    if cable.is_infinite() {
        return air;
    }
    air * cable / (air + cable + 1.0)
}

/// `10·log10(γ_a / γ_e2e)`, the SINR lost over the cable.
pub fn degradation_db(air: f64, cable: f64) -> f64 {
    if cable.is_infinite() {
        return 0.0;
    }
    10.0 * ((air + cable + 1.0) / cable).log10()
}

/// Degradation of every antenna in `air`, looked up through `mapping`.
pub fn transparency_check(
    air: &AirLinkSpec,
    alloc: &PowerAllocation,
    channels: &ChannelMatrixSet,
    mapping: &[AntennaAssignment],
) -> Result<Vec<f64>> {
    let gamma_a = air.air_snr_linear();
    (0..air.n_antennas)
        .map(|antenna| {
            let a = mapping
                .iter()
                .find(|m| m.antenna == antenna)
                .ok_or_else(|| Error::InvalidArgument(format!("antenna {antenna} is not mapped to any resource")))?;
            let tone = channels
                .tones
                .get(a.tone)
                .ok_or_else(|| Error::InvalidArgument(format!("tone {} out of range", a.tone)))?;
            let gamma_c = sinr(&tone.gains, &alloc.tone_powers(a.tone), &tone.noise_w, a.pair);
            Ok(degradation_db(gamma_a, gamma_c))
        })
        .collect()
}

/// Full planning pass over one allocated cable. `air.n_antennas` is capped
/// at what the cable can carry.
pub fn plan(alloc: &PowerAllocation, grid: &ToneGrid, channels: &ChannelMatrixSet, air: &AirLinkSpec, top_bits: u8) -> Result<PlannerReport> {
    let useful_bandwidth_hz = (0..grid.n_pairs())
        .map(|p| useful_bandwidth(alloc, grid, p))
        .collect::<Result<Vec<_>>>()?;
    let n_antennas_max = max_antennas(&useful_bandwidth_hz, air.air_bandwidth_hz)?;
    let active = alloc.bits.iter().flatten().filter(|&&b| b > 0).count();
    let n_mapped = air.n_antennas.min(n_antennas_max).min(active);
    let mapping = map_antennas(n_mapped, alloc, grid, air.air_bandwidth_hz)?;
    let mapped_air = AirLinkSpec {
        n_antennas: n_mapped,
        ..*air
    };
    let degradation_db = transparency_check(&mapped_air, alloc, channels, &mapping)?;
    Ok(PlannerReport {
        useful_bandwidth_hz,
        n_antennas_max,
        line_rate_bps: alloc.line_rate_bps.clone(),
        line_power_dbm: alloc.line_power_dbm(),
        qam256_bandwidth_hz: full_rate_bandwidth(alloc, grid, top_bits),
        mapping,
        degradation_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alloc_from_bits(bits: Vec<Vec<u8>>) -> PowerAllocation {
        let n = bits.first().map_or(0, Vec::len);
        let powers_w = bits
            .iter()
            .map(|row| row.iter().map(|&b| if b > 0 { 1e-4 } else { 0.0 }).collect())
            .collect();
        let line_power_w = (0..n).map(|p| bits.iter().filter(|r| r[p] > 0).count() as f64 * 1e-4).collect();
        let line_rate_bps = (0..n).map(|p| bits.iter().map(|r| r[p] as f64 * 22e6).sum()).collect();
        PowerAllocation {
            tone_bandwidth_hz: 22e6,
            bits,
            powers_w,
            line_power_w,
            line_rate_bps,
            duals: vec![0.0; n],
            converged: true,
        }
    }

    #[test]
    fn floor_sum() {
        assert_eq!(max_antennas(&[500e6; 4], 22e6).unwrap(), 88);
        assert_eq!(max_antennas(&[0.0; 4], 22e6).unwrap(), 0);
        assert_eq!(max_antennas(&[44e6, 44e6, 22e6, 21.9e6], 22e6).unwrap(), 5);
        assert_eq!(max_antennas(&[22e6 * 7.0], 22e6).unwrap(), 7);
        assert!(max_antennas(&[1.0], 0.0).is_err());
    }

    #[test]
    fn useful_bandwidth_counts_active_tones() {
        let grid = ToneGrid::default();
        let full = alloc_from_bits(vec![vec![8; 4]; 22]);
        assert_eq!(useful_bandwidth(&full, &grid, 0).unwrap(), 484e6);
        let off = alloc_from_bits(vec![vec![0; 4]; 22]);
        assert_eq!(useful_bandwidth(&off, &grid, 3).unwrap(), 0.0);
        assert!(useful_bandwidth(&off, &grid, 4).is_err());
    }

    #[test]
    fn greedy_mapping() {
        let grid = ToneGrid::new(66e6, 22e6, 2).unwrap();
        let alloc = alloc_from_bits(vec![vec![4, 8], vec![8, 0], vec![2, 2]]);
        let m = map_antennas(1, &alloc, &grid, 22e6).unwrap();
        assert_eq!(m, vec![AntennaAssignment { antenna: 0, pair: 1, tone: 0 }]);
        let m = map_antennas(5, &alloc, &grid, 22e6).unwrap();
        let order: Vec<(usize, usize)> = m.iter().map(|a| (a.tone, a.pair)).collect();
        assert_eq!(order, vec![(0, 1), (1, 0), (0, 0), (2, 0), (2, 1)]);
        match map_antennas(6, &alloc, &grid, 22e6) {
            Err(Error::CapacityExceeded { requested: 6, available: 5 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn full_grid_mapping_is_bijective() {
        let grid = ToneGrid::default();
        let alloc = alloc_from_bits(vec![vec![8; 4]; 22]);
        let m = map_antennas(88, &alloc, &grid, 22e6).unwrap();
        let mut seen = std::collections::HashSet::new();
        for a in &m {
            assert!(seen.insert((a.pair, a.tone)));
        }
        assert_eq!(seen.len(), 88);
        assert!(matches!(map_antennas(89, &alloc, &grid, 22e6), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn af_cascade_values() {
        let (a, c) = (100.0, 1000.0);
        let e = end_to_end_sinr(a, c);
        assert!((e - 1e5 / 1101.0).abs() < 1e-12);
        assert!((10.0 * e.log10() - 19.58).abs() < 5e-3);
        assert!((degradation_db(a, c) - 0.42).abs() < 5e-3);
        assert_eq!(degradation_db(a, f64::INFINITY), 0.0);
        assert!(degradation_db(a, 1e15) < 1e-10);
        let g = 1e9;
        assert!((degradation_db(g, g) - 10.0 * 2f64.log10()).abs() < 1e-6);
    }

    #[test]
    fn transparency_requires_mapping() {
        let grid = ToneGrid::new(44e6, 22e6, 1).unwrap();
        let alloc = alloc_from_bits(vec![vec![8], vec![8]]);
        let channels = ChannelMatrixSet {
            tone_bandwidth_hz: 22e6,
            tones: grid
                .centers_hz()
                .iter()
                .map(|&c| crate::cable_model::ToneChannel {
                    center_hz: c,
                    gains: nalgebra::DMatrix::from_element(1, 1, 0.5),
                    noise_w: nalgebra::DVector::from_element(1, 1e-9),
                })
                .collect(),
        };
        let mapping = map_antennas(1, &alloc, &grid, 22e6).unwrap();
        let air = AirLinkSpec::new(1, 2, 20.0, 22e6).unwrap();
        assert!(transparency_check(&air, &alloc, &channels, &mapping).is_err());
        let air = AirLinkSpec::new(1, 1, 20.0, 22e6).unwrap();
        let d = transparency_check(&air, &alloc, &channels, &mapping).unwrap();
        // γ_c = 0.5·1e-4 / 1e-9 = 5e4.
        assert!((d[0] - degradation_db(100.0, 5e4)).abs() < 1e-12);
    }
}
