//! Adaptive best-of-n stopping for streams with unknown reward scale.
//!
//! The policies here never see a reward distribution. They watch log-reward
//! draws arrive one at a time and maintain a model of the upper tail:
//!
//! 1. [`StreamingTailStats`] tracks the running median and the set of draws
//!    strictly above it (the exceedance set) with two heaps plus an exact
//!    fixed-point accumulator, so every queried statistic equals a
//!    from-scratch recomputation bit for bit.
//! 2. [`fit_tail`] turns those statistics into a shifted-exponential model of
//!    the reward `w = e^r`: location at the exponentiated median, mean excess
//!    from the exceedance set, widened or shrunk by a sample-size-aware
//!    multiplicative band.
//! 3. [`benchmark_estimate`] reads a high percentile off the fitted model;
//!    the acceptance curve [`acceptance_rate`] compares any draw against that
//!    benchmark on a smooth 0-to-1 scale.
//! 4. [`fair_cap_of_utility`] prices continued sampling: it solves
//!    `E[(u - cap)+] = cost` for the utility `u = budget * acceptance` of a
//!    fresh model draw, on a midpoint grid over the fitted reward range.
//!
//! [`run_adaptive`] combines all four into a per-draw stopping rule;
//! [`run_target_ar`] is the simpler variant that stops as soon as the best
//! draw's estimated acceptance reaches a target level.

use crate::distributions::RewardDistribution;
use crate::exact_sum::ExactSum;
use crate::policies::{Draw, RewardStream};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::HashMap;
use std::fmt;

/// Utility-cap grids integrate the fitted reward model up to its
/// (1 - 1e-7) quantile, i.e. `ln(1e7)` mean-excess units past the location.
const TAIL_LOG_RANGE: f64 = 16.11809565095832; // ln(1e7)

/// Default midpoint count for [`fair_cap_of_utility`].
pub const DEFAULT_UTILITY_INTERVALS: usize = 5000;

/// Floor for the shrunk mean-excess bound, as a fraction of the point
/// estimate, so small samples never produce a degenerate model.
const MEAN_EXCESS_FLOOR: f64 = 1e-3;

const MAX_BISECT_ITERS: u32 = 200;
const RESIDUAL_REL_TOL: f64 = 1e-3;
const BRACKET_REL_TOL: f64 = 1e-9;

// ---- Errors ----

#[derive(Debug, Clone, PartialEq)]
pub enum AdaptiveError {
    InvalidBudget(f64),
    InvalidCost(f64),
    InvalidDelta(f64),
    InvalidAlpha(f64),
    InvalidTarget(f64),
    InvalidKappa(f64),
    /// Warmup must allow at least one draw.
    InvalidWarmup,
    /// Utility grids need at least one interval.
    InvalidIntervals,
    /// Log-rewards must be finite with a finite exponential.
    RewardOutOfRange(f64),
    /// Not enough draws above the running median to fit a tail.
    InsufficientTailData { samples: usize, exceedance: usize },
    EmptyInput,
}

impl fmt::Display for AdaptiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptiveError::InvalidBudget(b) => {
                write!(f, "budget must be positive and finite, got {b}")
            }
            AdaptiveError::InvalidCost(c) => {
                write!(f, "cost must be nonnegative and finite, got {c}")
            }
            AdaptiveError::InvalidDelta(d) => {
                write!(f, "delta must lie strictly between 0 and 1, got {d}")
            }
            AdaptiveError::InvalidAlpha(a) => {
                write!(f, "benchmark percentile must lie strictly between 0 and 1, got {a}")
            }
            AdaptiveError::InvalidTarget(t) => {
                write!(f, "acceptance target must lie in [0, 1], got {t}")
            }
            AdaptiveError::InvalidKappa(k) => write!(f, "invalid benchmark {k}"),
            AdaptiveError::InvalidWarmup => write!(f, "warmup must be at least 1 draw"),
            AdaptiveError::InvalidIntervals => write!(f, "need at least one grid interval"),
            AdaptiveError::RewardOutOfRange(r) => write!(
                f,
                "log-reward {r} out of range (must be finite with finite exponential)"
            ),
            AdaptiveError::InsufficientTailData { samples, exceedance } => write!(
                f,
                "cannot fit tail: {exceedance} draws above the median out of {samples}"
            ),
            AdaptiveError::EmptyInput => write!(f, "no values given"),
        }
    }
}

impl std::error::Error for AdaptiveError {}

// ---- Acceptance curve ----

/// Acceptance of a log-reward `value` against benchmark `kappa`:
/// `min{ 2 / (1 + e^(kappa - value)), 1 }`.
///
/// Saturates at 1 for `value >= kappa`, decays smoothly to 0 below, and is
/// exactly 1/2 at `value = kappa - ln 3`. Evaluated through
/// `e^(value - kappa) <= 1` on the low branch, so extreme gaps cannot
/// overflow; `value = -inf` (no draws yet) gives 0.
pub fn acceptance_rate(kappa: f64, value: f64) -> f64 {
    debug_assert!(!kappa.is_nan() && !value.is_nan());
    if value >= kappa {
        1.0
    } else {
        let t = (value - kappa).exp();
        2.0 * t / (1.0 + t)
    }
}

/// Utility of holding a draw with log-reward `value`:
/// `budget * acceptance_rate(kappa, value)`.
pub fn utility(kappa: f64, value: f64, budget: f64) -> f64 {
    budget * acceptance_rate(kappa, value)
}

// ---- Streaming tail statistics ----

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Canonical median / exceedance readout of a batch of log-rewards.
///
/// * `median`: middle order statistic, mean of the two middles for even
///   counts.
/// * `exceedance_count`: draws strictly above the median.
/// * `exceedance_exp_mean`: mean of `e^r` over those draws (`None` when the
///   exceedance set is empty), with the sum carried exactly and rounded once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSummary {
    pub median: f64,
    pub exceedance_count: usize,
    pub exceedance_exp_mean: Option<f64>,
}

/// Single-pass median and upper-tail tracker.
///
/// The lower half of the draws lives in a max-heap, the upper half in a
/// min-heap, and the exact sum of `e^r` over the upper heap rides along,
/// together with per-value multiplicities for resolving draws tied with the
/// median. Queries therefore return exactly what a from-scratch pass over
/// the same multiset would: insertion order never leaks into the result.
#[derive(Debug, Clone, Default)]
pub struct StreamingTailStats {
    low: BinaryHeap<OrdF64>,
    high: BinaryHeap<Reverse<OrdF64>>,
    high_exp_sum: ExactSum,
    high_counts: HashMap<u64, usize>,
    count: usize,
}

fn normalize(r: f64) -> f64 {
    // Collapse -0.0 onto 0.0 so bit-keyed tie counting treats them as one.
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl StreamingTailStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Adds one log-reward. Rejects values whose exponential is not finite,
    /// since the tail model lives on `e^r`.
    pub fn insert(&mut self, r: f64) -> Result<(), AdaptiveError> {
        let r = normalize(r);
        if !r.is_finite() || !r.exp().is_finite() {
            return Err(AdaptiveError::RewardOutOfRange(r));
        }
        match self.low.peek() {
            Some(top) if r > top.0 => self.push_high(r),
            _ => self.low.push(OrdF64(r)),
        }
        if self.low.len() > self.high.len() + 1 {
            let x = self.low.pop().expect("low nonempty").0;
            self.push_high(x);
        } else if self.high.len() > self.low.len() {
            let x = self.pop_high();
            self.low.push(OrdF64(x));
        }
        self.count += 1;
        Ok(())
    }

    fn push_high(&mut self, x: f64) {
        self.high.push(Reverse(OrdF64(x)));
        self.high_exp_sum.add(x.exp());
        *self.high_counts.entry(x.to_bits()).or_insert(0) += 1;
    }

    fn pop_high(&mut self) -> f64 {
        let x = self.high.pop().expect("high nonempty").0 .0;
        self.high_exp_sum.sub(x.exp());
        let slot = self.high_counts.get_mut(&x.to_bits()).expect("counted");
        *slot -= 1;
        if *slot == 0 {
            self.high_counts.remove(&x.to_bits());
        }
        x
    }

    pub fn median(&self) -> Option<f64> {
        Some(self.summary()?.median)
    }

    /// Current median / exceedance readout; `None` before the first insert.
    pub fn summary(&self) -> Option<TailSummary> {
        let low_top = self.low.peek()?.0;
        let (median, tie_value) = if self.count % 2 == 1 {
            (low_top, Some(low_top))
        } else {
            let high_top = self.high.peek().expect("even count fills both halves").0 .0;
            let m = 0.5 * (low_top + high_top);
            // The upper heap's minimum exceeds the midpoint median unless the
            // two middles coincide, so ties need resolving only then.
            (m, (low_top == high_top).then_some(low_top))
        };
        let mut k = self.high.len();
        let mut sum = self.high_exp_sum.clone();
        if let Some(t) = tie_value {
            if let Some(&ties) = self.high_counts.get(&t.to_bits()) {
                k -= ties;
                let e = t.exp();
                for _ in 0..ties {
                    sum.sub(e);
                }
            }
        }
        let exceedance_exp_mean = (k > 0).then(|| sum.value() / k as f64);
        Some(TailSummary { median, exceedance_count: k, exceedance_exp_mean })
    }
}

/// From-scratch reference for [`StreamingTailStats::summary`]: sorts, takes
/// the same median convention, and sums `e^r` over the strict exceedance set
/// exactly. Streaming and batch results are interchangeable bit for bit.
pub fn batch_tail_summary(values: &[f64]) -> Result<TailSummary, AdaptiveError> {
    if values.is_empty() {
        return Err(AdaptiveError::EmptyInput);
    }
    let mut sorted = Vec::with_capacity(values.len());
    for &v in values {
        let v = normalize(v);
        if !v.is_finite() || !v.exp().is_finite() {
            return Err(AdaptiveError::RewardOutOfRange(v));
        }
        sorted.push(v);
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let tail: Vec<f64> = sorted.iter().copied().filter(|&v| v > median).collect();
    let exceedance_exp_mean = (!tail.is_empty())
        .then(|| ExactSum::of(tail.iter().map(|v| v.exp())).value() / tail.len() as f64);
    Ok(TailSummary { median, exceedance_count: tail.len(), exceedance_exp_mean })
}

// ---- Tail fitting ----

/// Multiplicative half-width of the mean-excess confidence band after `n`
/// draws at level `delta`: `sqrt(ln(n) ln(1/delta) / n)`.
pub fn fit_scaler(n: usize, delta: f64) -> f64 {
    debug_assert!(n >= 1 && delta > 0.0 && delta < 1.0);
    let nf = n as f64;
    (nf.ln() * (1.0 / delta).ln() / nf).sqrt()
}

/// A fitted shifted-exponential model of the reward `w = e^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    /// Model location: the exponentiated median log-reward.
    pub location: f64,
    /// Point estimate of the mean excess above the location.
    pub mean_excess: f64,
    /// Shrunk mean excess (floored at a small fraction of the estimate).
    pub mean_excess_lcb: f64,
    /// Widened mean excess.
    pub mean_excess_ucb: f64,
    /// Band half-width used for the bounds.
    pub scaler: f64,
    /// Draws seen in total.
    pub samples: usize,
    /// Draws strictly above the median.
    pub exceedance_count: usize,
}

impl TailFit {
    /// The widened model, for quantities that must not be underestimated.
    pub fn upper_distribution(&self) -> RewardDistribution {
        RewardDistribution::shifted_exponential(self.location, self.mean_excess_ucb)
            .expect("fit bounds are positive and finite")
    }

    /// The shrunk model, for quantities that must not be overestimated.
    pub fn lower_distribution(&self) -> RewardDistribution {
        RewardDistribution::shifted_exponential(self.location, self.mean_excess_lcb)
            .expect("fit bounds are positive and finite")
    }
}

/// Fits the upper-tail reward model from streaming statistics.
///
/// Location is `e^median`; the mean excess is the exceedance set's mean of
/// `e^r` minus the location. Needs a nonempty exceedance set and a strictly
/// positive excess (an all-ties batch has neither).
pub fn fit_tail(stats: &StreamingTailStats, delta: f64) -> Result<TailFit, AdaptiveError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AdaptiveError::InvalidDelta(delta));
    }
    let summary = stats
        .summary()
        .ok_or(AdaptiveError::InsufficientTailData { samples: 0, exceedance: 0 })?;
    let insufficient = AdaptiveError::InsufficientTailData {
        samples: stats.len(),
        exceedance: summary.exceedance_count,
    };
    let exp_mean = summary.exceedance_exp_mean.ok_or(insufficient.clone())?;
    let location = summary.median.exp();
    let mean_excess = exp_mean - location;
    if mean_excess <= 0.0 {
        return Err(insufficient);
    }
    let scaler = fit_scaler(stats.len(), delta);
    Ok(TailFit {
        location,
        mean_excess,
        mean_excess_lcb: (mean_excess * (1.0 - scaler)).max(MEAN_EXCESS_FLOOR * mean_excess),
        mean_excess_ucb: mean_excess * (1.0 + scaler),
        scaler,
        samples: stats.len(),
        exceedance_count: summary.exceedance_count,
    })
}

/// Estimated benchmark log-reward: the `alpha` percentile of the shrunk
/// model, `ln(location + mean_excess_lcb * ln(1/(1-alpha)))`.
pub fn benchmark_estimate(fit: &TailFit, alpha: f64) -> Result<f64, AdaptiveError> {
    benchmark_from(fit.location, fit.mean_excess_lcb, alpha)
}

/// Like [`benchmark_estimate`] but reading the widened model, which places
/// the benchmark higher. Target-acceptance stopping uses this so that an
/// underestimated benchmark cannot trigger a premature stop.
pub fn benchmark_estimate_upper(fit: &TailFit, alpha: f64) -> Result<f64, AdaptiveError> {
    benchmark_from(fit.location, fit.mean_excess_ucb, alpha)
}

fn benchmark_from(location: f64, mean_excess: f64, alpha: f64) -> Result<f64, AdaptiveError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AdaptiveError::InvalidAlpha(alpha));
    }
    Ok((location + mean_excess * (1.0 / (1.0 - alpha)).ln()).ln())
}

// ---- Utility fair cap ----

/// Result of pricing continued sampling against the fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityCap {
    /// Threshold on `u = budget * acceptance` at which one more draw stops
    /// paying for itself.
    pub cap: f64,
    /// `E[u]` of a fresh model draw.
    pub expected_utility: f64,
    /// True when even a fresh draw's full expected utility cannot cover the
    /// cost; the cap is 0 and stopping immediately is correct.
    pub immediate: bool,
}

/// Fixed quadrature over a standardized unit-mean exponential excess: the
/// fitted model's reward is `location + mean_excess * x`, so the nodes and
/// masses never depend on the fit and are built once per policy run.
struct UtilityGrid {
    nodes: Vec<f64>,
    masses: Vec<f64>,
}

impl UtilityGrid {
    fn new(intervals: usize) -> Self {
        let h = TAIL_LOG_RANGE / intervals as f64;
        let nodes: Vec<f64> = (0..intervals).map(|i| (i as f64 + 0.5) * h).collect();
        let masses: Vec<f64> = nodes.iter().map(|x| (-x).exp() * h).collect();
        Self { nodes, masses }
    }

    /// Solves `E[(u - cap)+] = cost` for the utility of a model draw,
    /// `u = budget * acceptance_rate(kappa, ln w)`, `w ~ fitted upper model`.
    ///
    /// The acceptance of a reward `w` reduces to `min{1, 2w / (K + w)}` with
    /// `K = e^kappa`, so each node costs a handful of flops and the whole
    /// solve stays cheap enough to run after every draw.
    fn solve(&self, location: f64, mean_excess: f64, kappa: f64, budget: f64, cost: f64) -> UtilityCap {
        let k_reward = kappa.exp();
        let utilities: Vec<f64> = self
            .nodes
            .iter()
            .map(|x| {
                let w = location + mean_excess * x;
                budget * (2.0 * w / (k_reward + w)).min(1.0)
            })
            .collect();
        let clipped_mean = |cap: f64| -> f64 {
            utilities
                .iter()
                .zip(&self.masses)
                .map(|(u, m)| (u - cap).max(0.0) * m)
                .sum()
        };
        let expected_utility = clipped_mean(0.0);
        if cost == 0.0 {
            // Free draws: only a saturated acceptance justifies stopping.
            return UtilityCap { cap: budget, expected_utility, immediate: false };
        }
        if expected_utility <= cost {
            return UtilityCap { cap: 0.0, expected_utility, immediate: true };
        }
        let mut lo = 0.0f64;
        let mut hi = budget;
        let mut cap = 0.5 * (lo + hi);
        for _ in 0..MAX_BISECT_ITERS {
            cap = 0.5 * (lo + hi);
            let pe = clipped_mean(cap);
            if (pe - cost).abs() <= RESIDUAL_REL_TOL * cost {
                break;
            }
            if pe > cost {
                lo = cap;
            } else {
                hi = cap;
            }
            if hi - lo <= BRACKET_REL_TOL * (1.0 + cap) {
                cap = 0.5 * (lo + hi);
                break;
            }
        }
        UtilityCap { cap, expected_utility, immediate: false }
    }
}

/// Prices continued sampling under a fitted tail model. See
/// [`UtilityGrid::solve`]; this wrapper builds the default-resolution grid.
pub fn fair_cap_of_utility(
    fit: &TailFit,
    kappa: f64,
    budget: f64,
    cost: f64,
) -> Result<UtilityCap, AdaptiveError> {
    fair_cap_of_utility_with_intervals(fit, kappa, budget, cost, DEFAULT_UTILITY_INTERVALS)
}

pub fn fair_cap_of_utility_with_intervals(
    fit: &TailFit,
    kappa: f64,
    budget: f64,
    cost: f64,
    intervals: usize,
) -> Result<UtilityCap, AdaptiveError> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(AdaptiveError::InvalidBudget(budget));
    }
    if !cost.is_finite() || cost < 0.0 {
        return Err(AdaptiveError::InvalidCost(cost));
    }
    if kappa.is_nan() || kappa > f64::MAX.ln() {
        return Err(AdaptiveError::InvalidKappa(kappa));
    }
    if intervals == 0 {
        return Err(AdaptiveError::InvalidIntervals);
    }
    let grid = UtilityGrid::new(intervals);
    Ok(grid.solve(fit.location, fit.mean_excess_ucb, kappa, budget, cost))
}

// ---- Adaptive policies ----

/// Configuration for [`run_adaptive`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    /// Value of an accepted draw at full acceptance.
    pub budget: f64,
    /// Cost per draw (may be 0: then only a saturated acceptance stops).
    pub cost: f64,
    /// Benchmark percentile in (0, 1).
    pub alpha: f64,
    /// Confidence level in (0, 1) for the fit band.
    pub delta: f64,
    /// Minimum draws before the stopping rule engages (at least 1).
    pub warmup: usize,
    /// Utility-cap grid resolution.
    pub intervals: usize,
}

impl AdaptiveConfig {
    /// Defaults: `delta` 0.1, `warmup` 8, full-resolution grid.
    pub fn new(budget: f64, cost: f64, alpha: f64) -> Self {
        Self { budget, cost, alpha, delta: 0.1, warmup: 8, intervals: DEFAULT_UTILITY_INTERVALS }
    }

    pub fn validate(&self) -> Result<(), AdaptiveError> {
        if !self.budget.is_finite() || self.budget <= 0.0 {
            return Err(AdaptiveError::InvalidBudget(self.budget));
        }
        if !self.cost.is_finite() || self.cost < 0.0 {
            return Err(AdaptiveError::InvalidCost(self.cost));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AdaptiveError::InvalidAlpha(self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AdaptiveError::InvalidDelta(self.delta));
        }
        if self.warmup == 0 {
            return Err(AdaptiveError::InvalidWarmup);
        }
        if self.intervals == 0 {
            return Err(AdaptiveError::InvalidIntervals);
        }
        Ok(())
    }
}

/// Configuration for [`run_target_ar`].
#[derive(Debug, Clone, PartialEq)]
pub struct TargetArConfig {
    /// Stop once the best draw's estimated acceptance reaches this level
    /// (in [0, 1]; 0 stops right after warmup).
    pub target: f64,
    /// Benchmark percentile in (0, 1).
    pub alpha: f64,
    /// Confidence level in (0, 1) for the fit band.
    pub delta: f64,
    /// Minimum draws before the stopping rule engages (at least 1).
    pub warmup: usize,
}

impl TargetArConfig {
    /// Defaults: `delta` 0.1, `warmup` 8.
    pub fn new(target: f64, alpha: f64) -> Self {
        Self { target, alpha, delta: 0.1, warmup: 8 }
    }

    pub fn validate(&self) -> Result<(), AdaptiveError> {
        if !(0.0..=1.0).contains(&self.target) {
            return Err(AdaptiveError::InvalidTarget(self.target));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AdaptiveError::InvalidAlpha(self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AdaptiveError::InvalidDelta(self.delta));
        }
        if self.warmup == 0 {
            return Err(AdaptiveError::InvalidWarmup);
        }
        Ok(())
    }
}

/// Result of one adaptive run.
///
/// The diagnostic fields are `None` when the run ended before the first
/// successful tail fit (e.g. a draw cap inside the warmup).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub stopping_time: usize,
    pub max_reward: f64,
    /// Last benchmark estimate computed before stopping.
    pub kappa_estimate: Option<f64>,
    /// Acceptance of the best draw under that benchmark.
    pub acceptance_of_max: Option<f64>,
    /// `budget * acceptance_of_max - cost * stopping_time`; `None` in
    /// target-acceptance mode, which has no budget.
    pub utility_payoff: Option<f64>,
    pub stopped_by_cap: bool,
}

fn adaptive_outcome(
    stopping_time: usize,
    max_reward: f64,
    kappa: Option<f64>,
    budget_cost: Option<(f64, f64)>,
    stopped_by_cap: bool,
) -> AdaptiveOutcome {
    let acceptance_of_max = kappa.map(|k| acceptance_rate(k, max_reward));
    let utility_payoff = match (acceptance_of_max, budget_cost) {
        (Some(ar), Some((budget, cost))) => Some(budget * ar - cost * stopping_time as f64),
        _ => None,
    };
    AdaptiveOutcome {
        stopping_time,
        max_reward,
        kappa_estimate: kappa,
        acceptance_of_max,
        utility_payoff,
        stopped_by_cap,
    }
}

/// Adaptive best-of-n: draw, refit, and stop once the best draw's utility
/// reaches the fitted utility fair cap.
///
/// Each draw updates the streaming tail statistics. From `warmup` draws
/// onward the policy refits the model, re-estimates the benchmark, re-prices
/// continued sampling, and stops when `utility(kappa, max) >= cap` (or when
/// the pricing says stopping immediately is correct). Failed fits (no usable
/// exceedance yet) just keep drawing. A cost at or above the budget stops at
/// the warmup boundary, since no draw can be worth its price.
///
/// Hitting the stream's draw cap or the end of a recorded trace ends the run
/// gracefully with `stopped_by_cap` set: for a budgeted run, running out of
/// data and running out of draws are the same event.
pub fn run_adaptive(
    stream: &mut RewardStream,
    config: &AdaptiveConfig,
) -> Result<AdaptiveOutcome, AdaptiveError> {
    config.validate()?;
    let grid = UtilityGrid::new(config.intervals);
    let stop_at_warmup = config.cost >= config.budget;
    let mut stats = StreamingTailStats::new();
    let mut max_reward = f64::NEG_INFINITY;
    let mut draws = 0usize;
    let mut last_kappa = None;
    let budget_cost = Some((config.budget, config.cost));
    loop {
        match stream.next_draw() {
            Draw::Value(v) => {
                draws += 1;
                stats.insert(v)?;
                max_reward = max_reward.max(v);
                if draws < config.warmup {
                    continue;
                }
                let mut stop = stop_at_warmup;
                if let Ok(fit) = fit_tail(&stats, config.delta) {
                    let kappa = benchmark_estimate(&fit, config.alpha)?;
                    last_kappa = Some(kappa);
                    if !stop {
                        let priced = grid.solve(
                            fit.location,
                            fit.mean_excess_ucb,
                            kappa,
                            config.budget,
                            config.cost,
                        );
                        stop = priced.immediate
                            || utility(kappa, max_reward, config.budget) >= priced.cap;
                    }
                }
                if stop {
                    return Ok(adaptive_outcome(draws, max_reward, last_kappa, budget_cost, false));
                }
            }
            Draw::CapHit | Draw::Exhausted => {
                return Ok(adaptive_outcome(draws, max_reward, last_kappa, budget_cost, true));
            }
        }
    }
}

/// Target-acceptance stopping: draw until the best draw's acceptance against
/// the (upper) estimated benchmark reaches `target`.
///
/// Uses the widened benchmark so that an underestimated tail cannot stop the
/// run early. Stream caps and trace ends are graceful, as in
/// [`run_adaptive`]; a target of 0 stops right at the warmup boundary.
pub fn run_target_ar(
    stream: &mut RewardStream,
    config: &TargetArConfig,
) -> Result<AdaptiveOutcome, AdaptiveError> {
    config.validate()?;
    let stop_at_warmup = config.target == 0.0;
    let mut stats = StreamingTailStats::new();
    let mut max_reward = f64::NEG_INFINITY;
    let mut draws = 0usize;
    let mut last_kappa = None;
    loop {
        match stream.next_draw() {
            Draw::Value(v) => {
                draws += 1;
                stats.insert(v)?;
                max_reward = max_reward.max(v);
                if draws < config.warmup {
                    continue;
                }
                let mut stop = stop_at_warmup;
                if let Ok(fit) = fit_tail(&stats, config.delta) {
                    let kappa = benchmark_estimate_upper(&fit, config.alpha)?;
                    last_kappa = Some(kappa);
                    stop = stop || acceptance_rate(kappa, max_reward) >= config.target;
                }
                if stop {
                    return Ok(adaptive_outcome(draws, max_reward, last_kappa, None, false));
                }
            }
            Draw::CapHit | Draw::Exhausted => {
                return Ok(adaptive_outcome(draws, max_reward, last_kappa, None, true));
            }
        }
    }
}
