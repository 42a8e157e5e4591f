//! Optimum spectrum balancing over the cable's space-frequency resources.
//!
//! Each tone is solved exactly: every tuple of constellations (one per pair)
//! is turned into the unique power vector that meets its SINR targets,
//!
//! ```text
//! p_k = (D_k − Λ_k A_k)^{-1} Λ_k σ_k
//! ```
//!
//! and the tuple maximizing `f_s·Σ b^n − Σ λ_n p^n` wins. The per-line power
//! budgets are enforced through the dual prices `λ_n`, adjusted one line at
//! a time by bisection until no price moves.

use nalgebra::{DMatrix, DVector};

use crate::band_plan::McsProfile;
use crate::cable_model::{db_to_linear, ChannelMatrixSet, ToneChannel};
use crate::error::{Error, Result};

pub const DEFAULT_LINE_TOTAL_DBM: f64 = 4.0;

/// Per-line and per-tone transmit power limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConstraints {
    per_line_total_dbm: f64,
    per_tone_mask_dbm: f64,
}

impl PowerConstraints {
    pub fn new(per_line_total_dbm: f64, per_tone_mask_dbm: f64) -> Result<Self> {
        if per_line_total_dbm.is_nan() || per_line_total_dbm == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "per-line power budget must be a number above -inf dBm, got {per_line_total_dbm}"
            )));
        }
        if !per_tone_mask_dbm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "per-tone mask must be finite, got {per_tone_mask_dbm} dBm"
            )));
        }
        Ok(PowerConstraints {
            per_line_total_dbm,
            per_tone_mask_dbm,
        })
    }

    /// Mask expressed as a PSD integrated over one tone.
    pub fn from_mask_psd(per_line_total_dbm: f64, mask_psd_dbm_hz: f64, tone_bandwidth_hz: f64) -> Result<Self> {
        PowerConstraints::new(
            per_line_total_dbm,
            mask_psd_dbm_hz + 10.0 * tone_bandwidth_hz.log10(),
        )
    }

    pub fn per_line_total_dbm(&self) -> f64 {
        self.per_line_total_dbm
    }

    pub fn per_tone_mask_dbm(&self) -> f64 {
        self.per_tone_mask_dbm
    }

    pub fn per_line_total_w(&self) -> f64 {
        dbm_to_w(self.per_line_total_dbm)
    }

    pub fn per_tone_mask_w(&self) -> f64 {
        dbm_to_w(self.per_tone_mask_dbm)
    }
}

impl Default for PowerConstraints {
    fn default() -> Self {
        PowerConstraints::from_mask_psd(
            DEFAULT_LINE_TOTAL_DBM,
            crate::cable_model::DEFAULT_MASK_PSD_DBM_HZ,
            crate::band_plan::DEFAULT_TONE_BANDWIDTH_HZ,
        )
        .expect("default constraints are finite")
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// `−∞` for zero power.
pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// SINR of pair `n`: `|h^{n,n}|² p^n / (Σ_{m≠n} |h^{n,m}|² p^m + σ^n)`.
/// Returns 0 when both numerator and denominator vanish.
pub fn sinr(gains: &DMatrix<f64>, powers: &DVector<f64>, noise: &DVector<f64>, n: usize) -> f64 {
    let signal = gains[(n, n)] * powers[n];
    let interference: f64 = (0..powers.len())
        .filter(|&m| m != n)
        .map(|m| gains[(n, m)] * powers[m])
        .sum();
    let denom = interference + noise[n];
    if signal == 0.0 {
        0.0
    } else {
        signal / denom
    }
}

/// Outcome of solving for the powers that meet a set of SINR targets.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSolution {
    Feasible(DVector<f64>),
    Infeasible,
}

impl PowerSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self, PowerSolution::Feasible(_))
    }

    pub fn powers(&self) -> Option<&DVector<f64>> {
        match self {
            PowerSolution::Feasible(p) => Some(p),
            PowerSolution::Infeasible => None,
        }
    }
}

/// Minimum powers hitting the linear SINR `targets` exactly. Pairs with a
/// zero target are switched off and excluded from the system. Singular
/// systems, non-positive solutions (the targets are not jointly reachable)
/// and powers above `mask_w` are all reported as infeasible.
pub fn solve_powers(gains: &DMatrix<f64>, targets: &[f64], noise: &DVector<f64>, mask_w: f64) -> PowerSolution {
    let n = targets.len();
    let active: Vec<usize> = (0..n).filter(|&i| targets[i] > 0.0).collect();
    let mut powers = DVector::zeros(n);
    if active.is_empty() {
        return PowerSolution::Feasible(powers);
    }
    let dim = active.len();
    let system = DMatrix::from_fn(dim, dim, |r, c| {
        let (i, j) = (active[r], active[c]);
        if i == j {
            gains[(i, i)]
        } else {
            -targets[i] * gains[(i, j)]
        }
    });
    let rhs = DVector::from_fn(dim, |r, _| targets[active[r]] * noise[active[r]]);
    let Some(solution) = system.lu().solve(&rhs) else {
        return PowerSolution::Infeasible;
    };
    for (r, &i) in active.iter().enumerate() {
        let p = solution[r];
        if !(p.is_finite() && p > 0.0 && p <= mask_w) {
            return PowerSolution::Infeasible;
        }
        powers[i] = p;
    }
    PowerSolution::Feasible(powers)
}

/// A feasible constellation tuple on one tone with its required powers.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneChoice {
    pub bits: Vec<u8>,
    pub powers_w: Vec<f64>,
}

impl ToneChoice {
    pub fn total_power_w(&self) -> f64 {
        self.powers_w.iter().sum()
    }

    pub fn total_bits(&self) -> u32 {
        self.bits.iter().map(|&b| u32::from(b)).sum()
    }

    /// `f_s·Σ b − Σ λ_n p_n`.
    pub fn lagrangian(&self, lambdas: &[f64], tone_bandwidth_hz: f64) -> f64 {
        tone_bandwidth_hz * f64::from(self.total_bits())
            - self
                .powers_w
                .iter()
                .zip(lambdas)
                .map(|(p, l)| if *p == 0.0 { 0.0 } else { p * l })
                .sum::<f64>()
    }
}

/// `true` when `a` beats `b`: higher Lagrangian, then lower total power,
/// then lexicographically smaller bit tuple. Values within a relative
/// 1e-12 count as equal so that permuted tuples on symmetric channels tie.
fn prefer(a: &ToneChoice, a_obj: f64, b: &ToneChoice, b_obj: f64) -> bool {
    let tol = 1e-12 * a_obj.abs().max(b_obj.abs()).max(1.0);
    if a_obj > b_obj + tol {
        return true;
    }
    if a_obj < b_obj - tol {
        return false;
    }
    let (pa, pb) = (a.total_power_w(), b.total_power_w());
    let ptol = 1e-12 * pa.max(pb);
    if pa < pb - ptol {
        return true;
    }
    if pa > pb + ptol {
        return false;
    }
    a.bits < b.bits
}

/// Every feasible tuple on one tone, enumerated in lexicographic bit order.
/// Candidates do not depend on the dual prices, so the allocator builds this
/// once per tone and re-scores it for each price vector.
#[derive(Debug, Clone)]
pub struct ToneCandidates {
    choices: Vec<ToneChoice>,
}

impl ToneCandidates {
    pub fn enumerate(tone: &ToneChannel, profile: &McsProfile, mask_w: f64) -> Self {
        let n = tone.n_pairs();
        let entries = profile.entries();
        let levels = entries.len();
        let mut index = vec![0usize; n];
        let mut choices = Vec::new();
        let mut targets = vec![0.0; n];
        loop {
            for (t, &i) in targets.iter_mut().zip(&index) {
                *t = entries[i].target_sinr_linear();
            }
            if let PowerSolution::Feasible(p) = solve_powers(&tone.gains, &targets, &tone.noise_w, mask_w) {
                choices.push(ToneChoice {
                    bits: index.iter().map(|&i| entries[i].bits).collect(),
                    powers_w: p.iter().copied().collect(),
                });
            }
            // Odometer with pair 0 as the most significant digit.
            let mut pos = n;
            loop {
                if pos == 0 {
                    return ToneCandidates { choices };
                }
                pos -= 1;
                index[pos] += 1;
                if index[pos] < levels {
                    break;
                }
                index[pos] = 0;
            }
        }
    }

    pub fn choices(&self) -> &[ToneChoice] {
        &self.choices
    }

    /// Index of the Lagrangian-best candidate under `lambdas`.
    pub fn best_index(&self, lambdas: &[f64], tone_bandwidth_hz: f64) -> usize {
        let mut best = 0;
        let mut best_obj = self.choices[0].lagrangian(lambdas, tone_bandwidth_hz);
        for (i, c) in self.choices.iter().enumerate().skip(1) {
            let obj = c.lagrangian(lambdas, tone_bandwidth_hz);
            if prefer(c, obj, &self.choices[best], best_obj) {
                best = i;
                best_obj = obj;
            }
        }
        best
    }

    pub fn best(&self, lambdas: &[f64], tone_bandwidth_hz: f64) -> &ToneChoice {
        &self.choices[self.best_index(lambdas, tone_bandwidth_hz)]
    }
}

/// Exhaustive search of one tone: the constellation tuple maximizing
/// `f_s·Σ b^n − Σ λ_n p^n` under the per-tone mask.
pub fn per_tone_search(
    tone: &ToneChannel,
    lambdas: &[f64],
    profile: &McsProfile,
    constraints: &PowerConstraints,
    tone_bandwidth_hz: f64,
) -> Result<ToneChoice> {
    if lambdas.len() != tone.n_pairs() {
        return Err(Error::InvalidArgument(format!(
            "{} dual prices for {} pairs",
            lambdas.len(),
            tone.n_pairs()
        )));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidArgument("dual prices must be nonnegative".into()));
    }
    let candidates = ToneCandidates::enumerate(tone, profile, constraints.per_tone_mask_w());
    Ok(candidates.best(lambdas, tone_bandwidth_hz).clone())
}

/// Stopping rules for the dual price search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsbOptions {
    pub max_bisection_iters: usize,
    /// A line whose power lands this close below its budget is settled.
    pub power_tol_db: f64,
    pub lambda_rel_tol: f64,
    /// A sweep whose price moves all stay below this relative size ends the search.
    pub sweep_rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for OsbOptions {
    fn default() -> Self {
        OsbOptions {
            max_bisection_iters: 100,
            power_tol_db: 0.01,
            lambda_rel_tol: 1e-12,
            sweep_rel_tol: 1e-9,
            max_sweeps: 50,
        }
    }
}

/// Result of spectrum balancing: constellation and power per resource.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub tone_bandwidth_hz: f64,
    /// `bits[k][n]` for tone `k`, pair `n`.
    pub bits: Vec<Vec<u8>>,
    /// `powers_w[k][n]`, watts.
    pub powers_w: Vec<Vec<f64>>,
    /// `Σ_k p_k^n` per line.
    pub line_power_w: Vec<f64>,
    /// `f_s·Σ_k b_k^n` per line.
    pub line_rate_bps: Vec<f64>,
    /// Final dual prices, bps per watt.
    pub duals: Vec<f64>,
    /// False when the per-line price updates did not settle on a
    /// budget-feasible point; the allocation is then the best
    /// budget-feasible one encountered (most bits, then least power).
    pub converged: bool,
}

impl PowerAllocation {
    fn assemble(choices: Vec<ToneChoice>, n_pairs: usize, tone_bandwidth_hz: f64, duals: Vec<f64>, converged: bool) -> Self {
        let mut line_power_w = vec![0.0; n_pairs];
        let mut line_bits = vec![0u32; n_pairs];
        for c in &choices {
            for n in 0..n_pairs {
                line_power_w[n] += c.powers_w[n];
                line_bits[n] += u32::from(c.bits[n]);
            }
        }
        let (bits, powers_w) = choices.into_iter().map(|c| (c.bits, c.powers_w)).unzip();
        PowerAllocation {
            tone_bandwidth_hz,
            bits,
            powers_w,
            line_power_w,
            line_rate_bps: line_bits.iter().map(|&b| tone_bandwidth_hz * f64::from(b)).collect(),
            duals,
            converged,
        }
    }

    pub fn n_tones(&self) -> usize {
        self.bits.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.line_power_w.len()
    }

    pub fn total_rate_bps(&self) -> f64 {
        self.line_rate_bps.iter().sum()
    }

    pub fn line_power_dbm(&self) -> Vec<f64> {
        self.line_power_w.iter().map(|&w| w_to_dbm(w)).collect()
    }

    pub fn tone_powers(&self, tone: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.powers_w[tone])
    }

    /// Amplifier gains `B_k = diag(√p_k)` per tone, relative to a unit-power input.
    pub fn amplifier_gains(&self) -> Vec<DMatrix<f64>> {
        self.powers_w
            .iter()
            .map(|p| DMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|w| w.sqrt()))))
            .collect()
    }

    /// The full block-diagonal gain matrix `B = diag(B_1, …, B_{N_f})`.
    pub fn block_gain_matrix(&self) -> DMatrix<f64> {
        let n = self.n_pairs();
        let dim = n * self.n_tones();
        let mut b = DMatrix::zeros(dim, dim);
        for (k, p) in self.powers_w.iter().enumerate() {
            for (i, w) in p.iter().enumerate() {
                b[(k * n + i, k * n + i)] = w.sqrt();
            }
        }
        b
    }
}

struct DualSearch<'a> {
    candidates: &'a [ToneCandidates],
    n_pairs: usize,
    tone_bandwidth_hz: f64,
    budget_w: f64,
    options: OsbOptions,
    best: Option<(u64, f64, Vec<f64>)>,
}

impl<'a> DualSearch<'a> {
    /// Line powers at the given prices; records the best budget-feasible point.
    fn line_powers(&mut self, lambdas: &[f64]) -> Vec<f64> {
        let mut power = vec![0.0; self.n_pairs];
        let mut bits = 0u64;
        for tone in self.candidates {
            let c = tone.best(lambdas, self.tone_bandwidth_hz);
            for (acc, p) in power.iter_mut().zip(&c.powers_w) {
                *acc += p;
            }
            bits += u64::from(c.total_bits());
        }
        if power.iter().all(|&p| p <= self.budget_w) {
            let total: f64 = power.iter().sum();
            let better = match &self.best {
                None => true,
                Some((b, p, _)) => bits > *b || (bits == *b && total < *p),
            };
            if better {
                self.best = Some((bits, total, lambdas.to_vec()));
            }
        }
        power
    }

    fn line_power_at(&mut self, lambdas: &mut [f64], n: usize, value: f64) -> f64 {
        let saved = lambdas[n];
        lambdas[n] = value;
        let p = self.line_powers(lambdas)[n];
        lambdas[n] = saved;
        p
    }

    /// Moves `λ_n` to the smallest price keeping line `n` within budget.
    /// Returns whether the price changed.
    fn settle_line(&mut self, lambdas: &mut [f64], n: usize, initial_guess: f64) -> bool {
        let budget = self.budget_w;
        let near = budget * db_to_linear(-self.options.power_tol_db);
        let current = lambdas[n];
        let p_now = self.line_power_at(lambdas, n, current);
        if p_now <= budget
            && (current == 0.0
                || p_now >= near
                || self.line_power_at(lambdas, n, current * (1.0 - self.options.sweep_rel_tol)) > budget)
        {
            return false;
        }
        if self.line_power_at(lambdas, n, 0.0) <= budget {
            lambdas[n] = 0.0;
            return true;
        }
        let mut lo = 0.0;
        let mut hi = if current > 0.0 { current } else { initial_guess };
        while self.line_power_at(lambdas, n, hi) > budget {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                break;
            }
        }
        for _ in 0..self.options.max_bisection_iters {
            if hi - lo <= self.options.lambda_rel_tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let p = self.line_power_at(lambdas, n, mid);
            if p <= budget {
                hi = mid;
                if p >= near {
                    break;
                }
            } else {
                lo = mid;
            }
        }
        lambdas[n] = hi;
        (hi - current).abs() > self.options.sweep_rel_tol * hi.max(current)
    }

    fn feasible(&mut self, lambdas: &[f64]) -> bool {
        let budget = self.budget_w;
        self.line_powers(lambdas).iter().all(|&p| p <= budget)
    }

    /// Smallest common price shift that brings every line within budget.
    /// Coordinate updates can cycle when lines are symmetric and trade the
    /// same tones back and forth; shifting all prices keeps their order.
    fn repair(&mut self, lambdas: &[f64], initial_guess: f64) -> Vec<f64> {
        let shifted = |s: f64| lambdas.iter().map(|l| l + s).collect::<Vec<_>>();
        let top = lambdas.iter().copied().fold(0.0, f64::max);
        let mut lo = 0.0;
        let mut hi = (top * self.options.sweep_rel_tol).max(initial_guess * 1e-6);
        while !self.feasible(&shifted(hi)) {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return vec![f64::INFINITY; lambdas.len()];
            }
        }
        for _ in 0..self.options.max_bisection_iters {
            if hi - lo <= self.options.lambda_rel_tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.feasible(&shifted(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        shifted(hi)
    }
}

/// Spectrum balancing with the default stopping rules.
pub fn run_osb(channels: &ChannelMatrixSet, profile: &McsProfile, constraints: &PowerConstraints) -> Result<PowerAllocation> {
    run_osb_with(channels, profile, constraints, &OsbOptions::default())
}

pub fn run_osb_with(
    channels: &ChannelMatrixSet,
    profile: &McsProfile,
    constraints: &PowerConstraints,
    options: &OsbOptions,
) -> Result<PowerAllocation> {
    use rayon::prelude::*;

    let n_pairs = channels.n_pairs();
    if let Some(t) = channels.tones.iter().find(|t| t.n_pairs() != n_pairs || t.noise_w.len() != n_pairs) {
        return Err(Error::InvalidArgument(format!(
            "inconsistent channel dimensions at tone {} Hz",
            t.center_hz
        )));
    }
    let fs = channels.tone_bandwidth_hz;
    let mask_w = constraints.per_tone_mask_w();
    let candidates: Vec<ToneCandidates> = channels
        .tones
        .par_iter()
        .map(|t| ToneCandidates::enumerate(t, profile, mask_w))
        .collect();

    let mut search = DualSearch {
        candidates: &candidates,
        n_pairs,
        tone_bandwidth_hz: fs,
        budget_w: constraints.per_line_total_w(),
        options: *options,
        best: None,
    };
    // Price at which a full-mask top constellation just breaks even.
    let initial_guess = fs * f64::from(profile.max_bits().max(1)) / mask_w;
    let mut lambdas = vec![0.0; n_pairs];
    let mut converged = false;
    for _ in 0..options.max_sweeps {
        let mut moved = false;
        for n in 0..n_pairs {
            moved |= search.settle_line(&mut lambdas, n, initial_guess);
        }
        if !moved {
            converged = true;
            break;
        }
    }
    if !search.feasible(&lambdas) {
        converged = false;
        let repaired = search.repair(&lambdas, initial_guess);
        // `repair` visits at least one feasible point unless it gave up at
        // infinite prices, which switches everything off.
        lambdas = match search.best.take() {
            Some((_, _, l)) => l,
            None => repaired,
        };
    }
    let choices = candidates.iter().map(|c| c.best(&lambdas, fs).clone()).collect();
    Ok(PowerAllocation::assemble(choices, n_pairs, fs, lambdas, converged))
}
