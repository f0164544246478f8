//! The four benchmark experiments.
//!
//! All experiments over recorded traces share one replay scheme: ordering
//! `o` of a prompt replays that prompt's rewards permuted by the seed chain
//! `(base_seed, prompt_id, o)`, and whenever an adaptive arm is compared to
//! a fixed-budget arm, both arms consume the *same* permuted stream, so
//! every comparison is paired. Quality is always refereed by the prompt's
//! ground-truth benchmark (the empirical percentile of the full recorded
//! trace), never by the policy's own estimate.
//!
//! Orderings and replicas run on the rayon pool; shard results are
//! collected in index order and reduced sequentially, so reports are
//! byte-identical across runs and thread counts.

use super::seeding::{derive_seed, ground_truth_benchmark, permuted_rewards};
use super::trace::validate;
use super::{HarnessError, RewardTrace};
use crate::adaptive::{
    acceptance_rate, run_adaptive, run_target_ar, AdaptiveConfig, AdaptiveOutcome, TargetArConfig,
};
use crate::confidence::{regret_series, DEFAULT_SERIES_TERMS};
use crate::distributions::{fair_cap, RewardDistribution};
use crate::policies::{run_ucb_pandora, run_weitzman, RewardStream};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;

// ---- Shared helpers ----

/// `n` log-spaced points from `lo` to `hi` inclusive. `n == 1` gives `[lo]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && lo.is_finite(), "lower endpoint must be positive, got {lo}");
    assert!(hi >= lo && hi.is_finite(), "upper endpoint must be at least {lo}, got {hi}");
    assert!(n >= 1, "need at least one point");
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Median with the mean-of-middles convention for even counts.
pub(super) fn median_of(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { (values[mid - 1] + values[mid]) / 2.0 })
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    sum / count as f64
}

fn prefix_maxima(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut best = f64::NEG_INFINITY;
    for &v in values {
        best = best.max(v);
        out.push(best);
    }
    out
}

/// Budgets 1, 2, 4, ... up to `len`, plus `len` itself.
fn dyadic_budgets(len: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut n = 1usize;
    while n <= len {
        grid.push(n);
        n = n.saturating_mul(2);
    }
    if *grid.last().expect("len >= 1") != len {
        grid.push(len);
    }
    grid
}

fn validate_traces(traces: &[RewardTrace]) -> Result<(), HarnessError> {
    if traces.is_empty() {
        return Err(HarnessError::InvalidConfig("no traces supplied".into()));
    }
    let mut seen = BTreeSet::new();
    for t in traces {
        validate(t).map_err(HarnessError::InvalidConfig)?;
        if !seen.insert(&t.prompt_id) {
            return Err(HarnessError::InvalidConfig(format!(
                "duplicate prompt_id `{}`",
                t.prompt_id
            )));
        }
    }
    Ok(())
}

fn check_positive_finite(name: &str, values: &[f64]) -> Result<(), HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::InvalidConfig(format!("{name} list is empty")));
    }
    for &v in values {
        if !v.is_finite() || v <= 0.0 {
            return Err(HarnessError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<(), HarnessError> {
    if !(v > 0.0 && v < 1.0) {
        return Err(HarnessError::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// Per-prompt replay data shared by the trace experiments: each ordering's
/// permuted rewards and their running maxima.
struct Orderings {
    permuted: Vec<Vec<f64>>,
    prefix_max: Vec<Vec<f64>>,
}

impl Orderings {
    fn build(trace: &RewardTrace, base_seed: u64, count: usize) -> Self {
        let permuted: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|o| permuted_rewards(trace, base_seed, o as u64))
            .collect();
        let prefix_max = permuted.iter().map(|v| prefix_maxima(v)).collect();
        Orderings { permuted, prefix_max }
    }
}

// ---- Profit experiment ----

/// Adaptive stopping vs the best fixed budget in hindsight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitConfig {
    /// Value of a fully accepted draw.
    pub budget: f64,
    /// Per-draw costs to sweep.
    pub costs: Vec<f64>,
    /// Permuted replays per prompt.
    pub orderings: usize,
    pub base_seed: u64,
    /// Benchmark percentile.
    pub alpha: f64,
    /// Fit confidence level for the adaptive arm.
    pub delta: f64,
    pub warmup: usize,
    /// Utility-cap grid resolution for the adaptive arm.
    pub intervals: usize,
}

impl Default for ProfitConfig {
    fn default() -> Self {
        Self {
            budget: 1.0,
            costs: vec![0.002, 0.001, 0.0004, 0.0002],
            orderings: 100,
            base_seed: 0,
            alpha: 0.99,
            delta: 0.95,
            warmup: 16,
            intervals: 1000,
        }
    }
}

impl ProfitConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if !self.budget.is_finite() || self.budget <= 0.0 {
            return Err(HarnessError::InvalidConfig(format!(
                "budget must be positive, got {}",
                self.budget
            )));
        }
        check_positive_finite("cost", &self.costs)?;
        if self.orderings == 0 {
            return Err(HarnessError::InvalidConfig("need at least one ordering".into()));
        }
        check_fraction("alpha", self.alpha)?;
        check_fraction("delta", self.delta)?;
        if self.warmup == 0 || self.intervals == 0 {
            return Err(HarnessError::InvalidConfig(
                "warmup and intervals must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One (prompt, cost) cell. Profits are refereed by the prompt's recorded
/// benchmark: `budget * acceptance(benchmark, best draw) - cost * draws`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitRow {
    pub cost: f64,
    pub prompt_id: String,
    /// Ground-truth benchmark (empirical `alpha`-percentile of the trace).
    pub benchmark: f64,
    pub mean_adaptive_profit: f64,
    pub mean_adaptive_draws: f64,
    /// Hindsight-best fixed budget over the dyadic grid.
    pub best_fixed_n: usize,
    pub best_fixed_profit: f64,
    /// Adaptive profit over best fixed profit; `None` when no fixed budget
    /// is profitable, which makes the ratio meaningless.
    pub profit_ratio: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitCostSummary {
    pub cost: f64,
    /// Median ratio across prompts with a well-defined ratio.
    pub median_profit_ratio: Option<f64>,
    pub prompts: usize,
    pub degenerate_prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitReport {
    pub config: ProfitConfig,
    pub rows: Vec<ProfitRow>,
    pub summaries: Vec<ProfitCostSummary>,
}

pub fn run_profit_experiment(
    traces: &[RewardTrace],
    config: &ProfitConfig,
) -> Result<ProfitReport, HarnessError> {
    config.validate()?;
    validate_traces(traces)?;
    let mut rows = Vec::with_capacity(traces.len() * config.costs.len());
    for trace in traces {
        let benchmark = ground_truth_benchmark(trace, config.alpha)?;
        let orderings = Orderings::build(trace, config.base_seed, config.orderings);
        let budgets = dyadic_budgets(trace.rewards.len());
        for &cost in &config.costs {
            let adaptive_cfg = AdaptiveConfig {
                budget: config.budget,
                cost,
                alpha: config.alpha,
                delta: config.delta,
                warmup: config.warmup,
                intervals: config.intervals,
            };
            let outcomes: Vec<AdaptiveOutcome> = orderings
                .permuted
                .par_iter()
                .map(|values| {
                    let mut stream = RewardStream::from_trace(values.clone());
                    run_adaptive(&mut stream, &adaptive_cfg)
                })
                .collect::<Result<_, _>>()?;
            let profit = |best: f64, draws: usize| {
                config.budget * acceptance_rate(benchmark, best) - cost * draws as f64
            };
            let mean_adaptive_profit =
                mean_of(outcomes.iter().map(|o| profit(o.max_reward, o.stopping_time)));
            let mean_adaptive_draws = mean_of(outcomes.iter().map(|o| o.stopping_time as f64));
            let (mut best_fixed_n, mut best_fixed_profit) = (budgets[0], f64::NEG_INFINITY);
            for &n in &budgets {
                let fixed =
                    mean_of(orderings.prefix_max.iter().map(|prefix| profit(prefix[n - 1], n)));
                if fixed > best_fixed_profit {
                    best_fixed_n = n;
                    best_fixed_profit = fixed;
                }
            }
            let degenerate = best_fixed_profit <= 0.0;
            let profit_ratio =
                if degenerate { None } else { Some(mean_adaptive_profit / best_fixed_profit) };
            rows.push(ProfitRow {
                cost,
                prompt_id: trace.prompt_id.clone(),
                benchmark,
                mean_adaptive_profit,
                mean_adaptive_draws,
                best_fixed_n,
                best_fixed_profit,
                profit_ratio,
                degenerate,
            });
        }
    }
    let summaries = config
        .costs
        .iter()
        .map(|&cost| {
            let at_cost: Vec<&ProfitRow> = rows.iter().filter(|r| r.cost == cost).collect();
            ProfitCostSummary {
                cost,
                median_profit_ratio: median_of(
                    at_cost.iter().filter_map(|r| r.profit_ratio).collect(),
                ),
                prompts: at_cost.len(),
                degenerate_prompts: at_cost.iter().filter(|r| r.degenerate).count(),
            }
        })
        .collect();
    Ok(ProfitReport { config: config.clone(), rows, summaries })
}

// ---- Win-rate experiment ----

/// Adaptive stopping vs a fixed budget matched to its own average spend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRateConfig {
    pub budget: f64,
    pub costs: Vec<f64>,
    pub orderings: usize,
    pub base_seed: u64,
    pub alpha: f64,
    pub delta: f64,
    pub warmup: usize,
    pub intervals: usize,
}

impl Default for WinRateConfig {
    fn default() -> Self {
        Self {
            budget: 1.0,
            costs: log_spaced(1e-5, 1e-3, 9),
            orderings: 100,
            base_seed: 0,
            alpha: 0.99,
            delta: 0.8,
            warmup: 10,
            intervals: 1000,
        }
    }
}

impl WinRateConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        // Identical shape to the profit config.
        ProfitConfig {
            budget: self.budget,
            costs: self.costs.clone(),
            orderings: self.orderings,
            base_seed: self.base_seed,
            alpha: self.alpha,
            delta: self.delta,
            warmup: self.warmup,
            intervals: self.intervals,
        }
        .validate()
    }
}

/// One (prompt, cost) cell: per-ordering profit duels against the fixed
/// budget `round(mean adaptive draws)` on the same permuted streams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRateRow {
    pub cost: f64,
    pub prompt_id: String,
    pub mean_adaptive_draws: f64,
    /// `max(1, round_ties_even(mean_adaptive_draws))`.
    pub fixed_n: usize,
    /// `|mean_adaptive_draws - fixed_n|`; at most 0.5 by construction.
    pub budget_gap: f64,
    /// Wins count 1, exact profit ties count 1/2.
    pub win_rate: f64,
    pub mean_adaptive_profit: f64,
    pub mean_fixed_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRateCostSummary {
    pub cost: f64,
    pub median_win_rate: f64,
    pub prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRateReport {
    pub config: WinRateConfig,
    pub rows: Vec<WinRateRow>,
    pub summaries: Vec<WinRateCostSummary>,
}

pub fn run_winrate_experiment(
    traces: &[RewardTrace],
    config: &WinRateConfig,
) -> Result<WinRateReport, HarnessError> {
    config.validate()?;
    validate_traces(traces)?;
    let mut rows = Vec::with_capacity(traces.len() * config.costs.len());
    for trace in traces {
        let benchmark = ground_truth_benchmark(trace, config.alpha)?;
        let orderings = Orderings::build(trace, config.base_seed, config.orderings);
        for &cost in &config.costs {
            let adaptive_cfg = AdaptiveConfig {
                budget: config.budget,
                cost,
                alpha: config.alpha,
                delta: config.delta,
                warmup: config.warmup,
                intervals: config.intervals,
            };
            let outcomes: Vec<AdaptiveOutcome> = orderings
                .permuted
                .par_iter()
                .map(|values| {
                    let mut stream = RewardStream::from_trace(values.clone());
                    run_adaptive(&mut stream, &adaptive_cfg)
                })
                .collect::<Result<_, _>>()?;
            let profit = |best: f64, draws: usize| {
                config.budget * acceptance_rate(benchmark, best) - cost * draws as f64
            };
            let mean_adaptive_draws = mean_of(outcomes.iter().map(|o| o.stopping_time as f64));
            let fixed_n = (mean_adaptive_draws.round_ties_even() as usize)
                .max(1)
                .min(trace.rewards.len());
            let mut score = 0.0;
            let mut adaptive_sum = 0.0;
            let mut fixed_sum = 0.0;
            for (outcome, prefix) in outcomes.iter().zip(&orderings.prefix_max) {
                let a = profit(outcome.max_reward, outcome.stopping_time);
                let f = profit(prefix[fixed_n - 1], fixed_n);
                adaptive_sum += a;
                fixed_sum += f;
                if a > f {
                    score += 1.0;
                } else if a == f {
                    score += 0.5;
                }
            }
            let n_orderings = config.orderings as f64;
            rows.push(WinRateRow {
                cost,
                prompt_id: trace.prompt_id.clone(),
                mean_adaptive_draws,
                fixed_n,
                budget_gap: (mean_adaptive_draws - fixed_n as f64).abs(),
                win_rate: score / n_orderings,
                mean_adaptive_profit: adaptive_sum / n_orderings,
                mean_fixed_profit: fixed_sum / n_orderings,
            });
        }
    }
    let summaries = config
        .costs
        .iter()
        .map(|&cost| {
            let rates: Vec<f64> =
                rows.iter().filter(|r| r.cost == cost).map(|r| r.win_rate).collect();
            WinRateCostSummary {
                cost,
                prompts: rates.len(),
                median_win_rate: median_of(rates).expect("at least one prompt"),
            }
        })
        .collect();
    Ok(WinRateReport { config: config.clone(), rows, summaries })
}

// ---- Save-ratio experiment ----

/// Draws saved by stopping at a target acceptance level, relative to the
/// smallest fixed budget that matches the acceptance actually achieved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaveRatioConfig {
    /// Acceptance levels to stop at, each in [0, 1].
    pub targets: Vec<f64>,
    pub orderings: usize,
    pub base_seed: u64,
    pub alpha: f64,
    pub delta: f64,
    pub warmup: usize,
}

impl Default for SaveRatioConfig {
    fn default() -> Self {
        Self {
            targets: vec![0.75, 0.85, 0.90, 0.95],
            orderings: 100,
            base_seed: 0,
            alpha: 0.99,
            delta: 0.8,
            warmup: 10,
        }
    }
}

impl SaveRatioConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.targets.is_empty() {
            return Err(HarnessError::InvalidConfig("target list is empty".into()));
        }
        for &t in &self.targets {
            if !(0.0..=1.0).contains(&t) {
                return Err(HarnessError::InvalidConfig(format!(
                    "target must lie in [0, 1], got {t}"
                )));
            }
        }
        if self.orderings == 0 {
            return Err(HarnessError::InvalidConfig("need at least one ordering".into()));
        }
        check_fraction("alpha", self.alpha)?;
        check_fraction("delta", self.delta)?;
        if self.warmup == 0 {
            return Err(HarnessError::InvalidConfig("warmup must be at least 1".into()));
        }
        Ok(())
    }
}

/// One (prompt, target) cell. Acceptance columns are refereed by the
/// recorded benchmark; `mean_self_acceptance` is what the policy believed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaveRatioRow {
    pub target: f64,
    pub prompt_id: String,
    pub mean_adaptive_draws: f64,
    pub mean_acceptance: f64,
    pub mean_self_acceptance: f64,
    /// Smallest fixed budget whose mean acceptance matches the adaptive
    /// arm's achieved `mean_acceptance` (not the nominal target, so an
    /// over-delivering stop rule is charged for the quality it delivered).
    pub matched_fixed_n: Option<usize>,
    /// `(matched_fixed_n - mean_adaptive_draws) / matched_fixed_n`.
    pub save_ratio: Option<f64>,
    /// No fixed budget within the trace matches the achieved acceptance.
    pub unattainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaveRatioTargetSummary {
    pub target: f64,
    pub median_save_ratio: Option<f64>,
    pub median_acceptance: f64,
    pub prompts: usize,
    pub unattainable_prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaveRatioReport {
    pub config: SaveRatioConfig,
    pub rows: Vec<SaveRatioRow>,
    pub summaries: Vec<SaveRatioTargetSummary>,
}

pub fn run_save_ratio_experiment(
    traces: &[RewardTrace],
    config: &SaveRatioConfig,
) -> Result<SaveRatioReport, HarnessError> {
    config.validate()?;
    validate_traces(traces)?;
    let mut rows = Vec::with_capacity(traces.len() * config.targets.len());
    for trace in traces {
        let benchmark = ground_truth_benchmark(trace, config.alpha)?;
        let orderings = Orderings::build(trace, config.base_seed, config.orderings);
        // Mean refereed acceptance of a fixed budget n, for every n; shared
        // across targets. Nondecreasing in n, so the first crossing is the
        // matched budget.
        let len = trace.rewards.len();
        let mean_acceptance_at: Vec<f64> = (0..len)
            .map(|i| {
                mean_of(
                    orderings
                        .prefix_max
                        .iter()
                        .map(|prefix| acceptance_rate(benchmark, prefix[i])),
                )
            })
            .collect();
        for &target in &config.targets {
            let target_cfg = TargetArConfig {
                target,
                alpha: config.alpha,
                delta: config.delta,
                warmup: config.warmup,
            };
            let outcomes: Vec<AdaptiveOutcome> = orderings
                .permuted
                .par_iter()
                .map(|values| {
                    let mut stream = RewardStream::from_trace(values.clone());
                    run_target_ar(&mut stream, &target_cfg)
                })
                .collect::<Result<_, _>>()?;
            let mean_adaptive_draws = mean_of(outcomes.iter().map(|o| o.stopping_time as f64));
            let mean_acceptance =
                mean_of(outcomes.iter().map(|o| acceptance_rate(benchmark, o.max_reward)));
            let mean_self_acceptance =
                mean_of(outcomes.iter().map(|o| o.acceptance_of_max.unwrap_or(0.0)));
            let matched_fixed_n =
                mean_acceptance_at.iter().position(|&a| a >= mean_acceptance).map(|i| i + 1);
            let save_ratio =
                matched_fixed_n.map(|n| (n as f64 - mean_adaptive_draws) / n as f64);
            rows.push(SaveRatioRow {
                target,
                prompt_id: trace.prompt_id.clone(),
                mean_adaptive_draws,
                mean_acceptance,
                mean_self_acceptance,
                matched_fixed_n,
                save_ratio,
                unattainable: matched_fixed_n.is_none(),
            });
        }
    }
    let summaries = config
        .targets
        .iter()
        .map(|&target| {
            let at_target: Vec<&SaveRatioRow> =
                rows.iter().filter(|r| r.target == target).collect();
            SaveRatioTargetSummary {
                target,
                median_save_ratio: median_of(
                    at_target.iter().filter_map(|r| r.save_ratio).collect(),
                ),
                median_acceptance: median_of(
                    at_target.iter().map(|r| r.mean_acceptance).collect(),
                )
                .expect("at least one prompt"),
                prompts: at_target.len(),
                unattainable_prompts: at_target.iter().filter(|r| r.unattainable).count(),
            }
        })
        .collect();
    Ok(SaveRatioReport { config: config.clone(), rows, summaries })
}

// ---- Regret experiment ----

/// Optimistic stopping under an unknown exponential distribution vs the
/// informed fixed-cap policy, across reward rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretConfig {
    /// Exponential rates to sweep.
    pub rates: Vec<f64>,
    /// Per-rate costs; `None` pairs each rate with cost `e^-1 / rate`, which
    /// keeps every rate admissible and the informed policy's value at
    /// `1 / rate`.
    pub costs: Option<Vec<f64>>,
    pub replicas: usize,
    /// Confidence level for the optimistic policy.
    pub delta: f64,
    pub base_seed: u64,
    /// Per-replica draw cap; replicas that hit it are counted per row.
    pub max_draws: usize,
}

impl Default for RegretConfig {
    fn default() -> Self {
        Self {
            rates: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            costs: None,
            replicas: 10_000,
            delta: 0.1,
            base_seed: 0,
            max_draws: 1_000_000,
        }
    }
}

impl RegretConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        check_positive_finite("rate", &self.rates)?;
        if let Some(costs) = &self.costs {
            check_positive_finite("cost", costs)?;
            if costs.len() != self.rates.len() {
                return Err(HarnessError::InvalidConfig(format!(
                    "{} costs for {} rates",
                    costs.len(),
                    self.rates.len()
                )));
            }
        }
        if self.replicas < 2 {
            return Err(HarnessError::InvalidConfig("need at least two replicas".into()));
        }
        check_fraction("delta", self.delta)?;
        if self.max_draws == 0 {
            return Err(HarnessError::InvalidConfig("max draws must be at least 1".into()));
        }
        Ok(())
    }

    fn cost_for(&self, idx: usize) -> f64 {
        match &self.costs {
            Some(costs) => costs[idx],
            None => (-1.0f64).exp() / self.rates[idx],
        }
    }
}

/// One rate. `gap` is the informed policy's value minus the optimistic
/// policy's mean payoff; `bound` is the distribution-aware series bound on
/// that gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRow {
    pub rate: f64,
    pub cost: f64,
    /// Expected payoff of the informed fixed-cap policy (its cap).
    pub optimal_value: f64,
    pub weitzman_mean_payoff: f64,
    pub weitzman_mean_draws: f64,
    pub ucb_mean_payoff: f64,
    pub ucb_mean_draws: f64,
    pub gap: f64,
    /// Standard error of the mean optimistic payoff.
    pub gap_se: f64,
    pub bound: f64,
    pub cap_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub config: RegretConfig,
    pub rows: Vec<RegretRow>,
    /// Least-squares slope of `ln(gap * rate)` against `ln(rate)` over rows
    /// with a positive gap; `None` below three such rows. A slope near zero
    /// means the gap scales like `1 / rate`, matching the bound.
    pub scaled_gap_slope: Option<f64>,
    pub scaled_gap_slope_se: Option<f64>,
}

fn ols_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let x_bar = mean_of(points.iter().map(|p| p.0));
    let y_bar = mean_of(points.iter().map(|p| p.1));
    let sxx: f64 = points.iter().map(|p| (p.0 - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - x_bar) * (p.1 - y_bar)).sum();
    let slope = sxy / sxx;
    let sse: f64 = points.iter().map(|p| (p.1 - y_bar - slope * (p.0 - x_bar)).powi(2)).sum();
    let se = (sse / (n - 2) as f64 / sxx).sqrt();
    Some((slope, se))
}

pub fn run_regret_experiment(config: &RegretConfig) -> Result<RegretReport, HarnessError> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.rates.len());
    for (idx, &rate) in config.rates.iter().enumerate() {
        let cost = config.cost_for(idx);
        let dist = RewardDistribution::exponential(rate)
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        let cap = fair_cap(&dist, cost)
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?
            .cap;
        let bound = regret_series(rate, cost, config.delta, DEFAULT_SERIES_TERMS)
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?
            .bound;
        // Replica seeds do not depend on the rate, and exponential draws are
        // the same uniforms scaled by 1/rate, so replicas are paired across
        // the whole sweep.
        struct Replica {
            weitzman_payoff: f64,
            weitzman_draws: usize,
            ucb_payoff: f64,
            ucb_draws: usize,
            capped: bool,
        }
        let replicas: Vec<Replica> = (0..config.replicas)
            .into_par_iter()
            .map(|r| -> Result<Replica, HarnessError> {
                let seed = derive_seed(config.base_seed, "replica", r as u64);
                let mut weitzman_stream = RewardStream::from_distribution(dist.clone(), seed)
                    .with_draw_cap(config.max_draws);
                let weitzman = run_weitzman(&mut weitzman_stream, cap, cost)?;
                let mut ucb_stream = RewardStream::from_distribution(dist.clone(), seed)
                    .with_draw_cap(config.max_draws);
                let ucb = run_ucb_pandora(&mut ucb_stream, cost, config.delta)?;
                Ok(Replica {
                    weitzman_payoff: weitzman.payoff,
                    weitzman_draws: weitzman.stopping_time,
                    ucb_payoff: ucb.payoff,
                    ucb_draws: ucb.stopping_time,
                    capped: weitzman.stopped_by_cap || ucb.stopped_by_cap,
                })
            })
            .collect::<Result<_, _>>()?;
        let n = config.replicas as f64;
        let ucb_mean_payoff = mean_of(replicas.iter().map(|r| r.ucb_payoff));
        let ucb_var = replicas.iter().map(|r| (r.ucb_payoff - ucb_mean_payoff).powi(2)).sum::<f64>()
            / (n - 1.0);
        rows.push(RegretRow {
            rate,
            cost,
            optimal_value: cap,
            weitzman_mean_payoff: mean_of(replicas.iter().map(|r| r.weitzman_payoff)),
            weitzman_mean_draws: mean_of(replicas.iter().map(|r| r.weitzman_draws as f64)),
            ucb_mean_payoff,
            ucb_mean_draws: mean_of(replicas.iter().map(|r| r.ucb_draws as f64)),
            gap: cap - ucb_mean_payoff,
            gap_se: (ucb_var / n).sqrt(),
            bound,
            cap_hits: replicas.iter().filter(|r| r.capped).count(),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.gap > 0.0)
        .map(|r| (r.rate.ln(), (r.gap * r.rate).ln()))
        .collect();
    let (scaled_gap_slope, scaled_gap_slope_se) = match ols_slope(&points) {
        Some((slope, se)) => (Some(slope), Some(se)),
        None => (None, None),
    };
    Ok(RegretReport { config: config.clone(), rows, scaled_gap_slope, scaled_gap_slope_se })
}

// Keep the shared fixed-budget runner exercised against the prefix-maxima
// shortcut used above; see the tests.
#[cfg(test)]
fn fixed_profit_by_replay(values: &[f64], n: usize, cost: f64) -> f64 {
    let mut stream = RewardStream::from_trace(values.to_vec());
    let outcome = crate::policies::run_fixed_n(&mut stream, n, cost).expect("replay");
    outcome.payoff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixture::{generate_fixture, FixtureConfig};

    fn fixture(prompts: usize, samples: usize, seed: u64) -> Vec<RewardTrace> {
        let layout = format!("1x1x1x{prompts}x{samples}");
        generate_fixture(&FixtureConfig::new(layout.parse().unwrap(), seed)).unwrap()
    }

    #[test]
    fn log_spaced_grid() {
        let grid = log_spaced(1e-5, 1e-3, 9);
        assert_eq!(grid.len(), 9);
        assert!((grid[0] - 1e-5).abs() < 1e-18);
        assert!((grid[8] - 1e-3).abs() < 1e-16);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        // Log-spacing means constant ratios.
        let r0 = grid[1] / grid[0];
        let r7 = grid[8] / grid[7];
        assert!((r0 - r7).abs() < 1e-12);
        assert_eq!(log_spaced(2.0, 8.0, 1), vec![2.0]);
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median_of(vec![]), None);
        assert_eq!(median_of(vec![3.0]), Some(3.0));
        assert_eq!(median_of(vec![4.0, 1.0, 3.0]), Some(3.0));
        assert_eq!(median_of(vec![4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn dyadic_budget_grid() {
        assert_eq!(dyadic_budgets(1), vec![1]);
        assert_eq!(dyadic_budgets(8), vec![1, 2, 4, 8]);
        assert_eq!(dyadic_budgets(100), vec![1, 2, 4, 8, 16, 32, 64, 100]);
    }

    #[test]
    fn prefix_maxima_match_fixed_replay() {
        let traces = fixture(1, 64, 9);
        let values = permuted_rewards(&traces[0], 3, 1);
        let prefix = prefix_maxima(&values);
        for n in [1usize, 7, 64] {
            let replayed = fixed_profit_by_replay(&values, n, 0.01);
            let direct = prefix[n - 1] - 0.01 * n as f64;
            assert_eq!(replayed, direct, "n = {n}");
        }
    }

    #[test]
    fn profit_smoke() {
        let traces = fixture(3, 96, 5);
        let config = ProfitConfig {
            costs: vec![0.01, 0.002],
            orderings: 4,
            alpha: 0.99,
            intervals: 400,
            ..ProfitConfig::default()
        };
        let report = run_profit_experiment(&traces, &config).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.summaries.len(), 2);
        for row in &report.rows {
            assert!(row.mean_adaptive_draws >= config.warmup as f64);
            assert!(row.mean_adaptive_draws <= 96.0);
            assert!(row.best_fixed_profit.is_finite());
            assert_eq!(row.profit_ratio.is_none(), row.degenerate);
        }
        for summary in &report.summaries {
            assert_eq!(summary.prompts, 3);
        }
        assert_eq!(report, run_profit_experiment(&traces, &config).unwrap());
    }

    #[test]
    fn winrate_smoke() {
        let traces = fixture(3, 96, 6);
        let config = WinRateConfig {
            costs: vec![1e-3, 1e-4],
            orderings: 4,
            alpha: 0.99,
            intervals: 400,
            ..WinRateConfig::default()
        };
        let report = run_winrate_experiment(&traces, &config).unwrap();
        assert_eq!(report.rows.len(), 6);
        for row in &report.rows {
            assert!(row.fixed_n >= 1);
            assert!(row.budget_gap <= 0.5 + 1e-12, "gap {}", row.budget_gap);
            assert!((0.0..=1.0).contains(&row.win_rate));
            // win_rate is a half-integer count over 4 orderings.
            assert_eq!((row.win_rate * 8.0).round(), row.win_rate * 8.0);
        }
        for summary in &report.summaries {
            assert!((0.0..=1.0).contains(&summary.median_win_rate));
        }
        assert_eq!(report, run_winrate_experiment(&traces, &config).unwrap());
    }

    #[test]
    fn save_ratio_smoke_and_target_monotonicity() {
        let traces = fixture(2, 128, 12);
        let config = SaveRatioConfig {
            targets: vec![0.5, 0.8],
            orderings: 4,
            alpha: 0.99,
            ..SaveRatioConfig::default()
        };
        let report = run_save_ratio_experiment(&traces, &config).unwrap();
        assert_eq!(report.rows.len(), 4);
        for prompt in ["d0-l0-r0-p000", "d0-l0-r0-p001"] {
            let per_prompt: Vec<&SaveRatioRow> =
                report.rows.iter().filter(|r| r.prompt_id == prompt).collect();
            assert_eq!(per_prompt.len(), 2);
            // Raising the target can only lengthen runs and matched budgets.
            assert!(per_prompt[0].mean_adaptive_draws <= per_prompt[1].mean_adaptive_draws);
            if let (Some(low), Some(high)) =
                (per_prompt[0].matched_fixed_n, per_prompt[1].matched_fixed_n)
            {
                assert!(low <= high);
            }
            for row in per_prompt {
                assert!((0.0..=1.0).contains(&row.mean_acceptance));
                assert_eq!(row.save_ratio.is_none(), row.unattainable);
            }
        }
        assert_eq!(report, run_save_ratio_experiment(&traces, &config).unwrap());
    }

    #[test]
    fn regret_pairs_exactly_across_power_of_two_rates() {
        // Power-of-two rates make every replica's draw sequence an exact
        // 1/rate scaling of the rate-1 sequence, so draw counts match and
        // gap * rate is bit-identical across rows.
        let config = RegretConfig {
            rates: vec![0.5, 1.0, 2.0],
            replicas: 200,
            ..RegretConfig::default()
        };
        let report = run_regret_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 3);
        let reference = &report.rows[1];
        assert!((reference.optimal_value - 1.0).abs() < 1e-12);
        assert!((reference.weitzman_mean_payoff - 1.0).abs() < 0.3);
        for row in &report.rows {
            assert_eq!(row.weitzman_mean_draws, reference.weitzman_mean_draws);
            assert_eq!(row.ucb_mean_draws, reference.ucb_mean_draws);
            assert_eq!(row.gap * row.rate, reference.gap * reference.rate);
            assert_eq!(row.cap_hits, 0);
            assert!(row.gap > 0.0, "optimism price should show at rate {}", row.rate);
            assert!(row.gap_se > 0.0);
            assert!(row.bound > 0.0);
        }
        // Identical scaled gaps regress to a flat line with no residue.
        assert_eq!(report.scaled_gap_slope, Some(0.0));
        assert_eq!(report.scaled_gap_slope_se, Some(0.0));
        assert_eq!(report, run_regret_experiment(&config).unwrap());
    }

    #[test]
    fn regret_accepts_custom_costs() {
        let config = RegretConfig {
            rates: vec![1.0, 2.0],
            costs: Some(vec![0.2, 0.1]),
            replicas: 50,
            ..RegretConfig::default()
        };
        let report = run_regret_experiment(&config).unwrap();
        assert_eq!(report.rows[0].cost, 0.2);
        // Two rows cannot support a slope fit.
        assert_eq!(report.scaled_gap_slope, None);
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let traces = fixture(1, 32, 1);
        let bad_cost = ProfitConfig { costs: vec![0.0], ..ProfitConfig::default() };
        assert!(run_profit_experiment(&traces, &bad_cost).is_err());
        let no_orderings = WinRateConfig { orderings: 0, ..WinRateConfig::default() };
        assert!(run_winrate_experiment(&traces, &no_orderings).is_err());
        let bad_target = SaveRatioConfig { targets: vec![1.5], ..SaveRatioConfig::default() };
        assert!(run_save_ratio_experiment(&traces, &bad_target).is_err());
        let mismatched = RegretConfig {
            rates: vec![1.0],
            costs: Some(vec![0.1, 0.2]),
            ..RegretConfig::default()
        };
        assert!(run_regret_experiment(&mismatched).is_err());
        assert!(run_profit_experiment(&[], &ProfitConfig::default()).is_err());
        let dup = vec![traces[0].clone(), traces[0].clone()];
        assert!(run_profit_experiment(&dup, &ProfitConfig::default()).is_err());
    }
}
