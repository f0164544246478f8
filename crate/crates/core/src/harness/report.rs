//! Report serialization: CSV detail tables and JSON summaries.
//!
//! Everything here is written by hand with `{}` formatting, which for floats
//! is the shortest decimal that round-trips, so output is byte-stable across
//! runs and platforms. Prompt ids are written verbatim (the fixture ids
//! contain no commas); there is no quoting layer. Summaries carry the crate
//! version and the full configuration echo instead of timestamps, so a rerun
//! of the same build on the same inputs reproduces the files exactly.

use super::experiments::{
    median_of, ProfitCostSummary, ProfitReport, RegretReport, SaveRatioReport,
    SaveRatioTargetSummary, WinRateCostSummary, WinRateReport,
};
use super::trace::validate;
use super::{HarnessError, RewardTrace};
use serde::Serialize;
use std::io::Write;

fn opt_cell<T: std::fmt::Display>(value: &Option<T>) -> String {
    match value {
        Some(v) => v.to_string(),
        None => String::new(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(value).map_err(|e| HarnessError::Io(e.into()))
}

// ---- Experiment reports ----

impl ProfitReport {
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> Result<(), HarnessError> {
        writeln!(
            writer,
            "cost,prompt_id,benchmark,mean_adaptive_profit,mean_adaptive_draws,\
             best_fixed_n,best_fixed_profit,profit_ratio,degenerate"
        )?;
        for r in &self.rows {
            writeln!(
                writer,
                "{},{},{},{},{},{},{},{},{}",
                r.cost,
                r.prompt_id,
                r.benchmark,
                r.mean_adaptive_profit,
                r.mean_adaptive_draws,
                r.best_fixed_n,
                r.best_fixed_profit,
                opt_cell(&r.profit_ratio),
                r.degenerate
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String, HarnessError> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: &'static str,
            config: &'a super::ProfitConfig,
            summaries: &'a [ProfitCostSummary],
        }
        to_json(&Envelope {
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            summaries: &self.summaries,
        })
    }
}

impl WinRateReport {
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> Result<(), HarnessError> {
        writeln!(
            writer,
            "cost,prompt_id,mean_adaptive_draws,fixed_n,budget_gap,win_rate,\
             mean_adaptive_profit,mean_fixed_profit"
        )?;
        for r in &self.rows {
            writeln!(
                writer,
                "{},{},{},{},{},{},{},{}",
                r.cost,
                r.prompt_id,
                r.mean_adaptive_draws,
                r.fixed_n,
                r.budget_gap,
                r.win_rate,
                r.mean_adaptive_profit,
                r.mean_fixed_profit
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String, HarnessError> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: &'static str,
            config: &'a super::WinRateConfig,
            summaries: &'a [WinRateCostSummary],
        }
        to_json(&Envelope {
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            summaries: &self.summaries,
        })
    }
}

impl SaveRatioReport {
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> Result<(), HarnessError> {
        writeln!(
            writer,
            "target,prompt_id,mean_adaptive_draws,mean_acceptance,mean_self_acceptance,\
             matched_fixed_n,save_ratio,unattainable"
        )?;
        for r in &self.rows {
            writeln!(
                writer,
                "{},{},{},{},{},{},{},{}",
                r.target,
                r.prompt_id,
                r.mean_adaptive_draws,
                r.mean_acceptance,
                r.mean_self_acceptance,
                opt_cell(&r.matched_fixed_n),
                opt_cell(&r.save_ratio),
                r.unattainable
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String, HarnessError> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: &'static str,
            config: &'a super::SaveRatioConfig,
            summaries: &'a [SaveRatioTargetSummary],
        }
        to_json(&Envelope {
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            summaries: &self.summaries,
        })
    }
}

impl RegretReport {
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> Result<(), HarnessError> {
        writeln!(
            writer,
            "rate,cost,optimal_value,weitzman_mean_payoff,weitzman_mean_draws,\
             ucb_mean_payoff,ucb_mean_draws,gap,gap_se,bound,cap_hits"
        )?;
        for r in &self.rows {
            writeln!(
                writer,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.rate,
                r.cost,
                r.optimal_value,
                r.weitzman_mean_payoff,
                r.weitzman_mean_draws,
                r.ucb_mean_payoff,
                r.ucb_mean_draws,
                r.gap,
                r.gap_se,
                r.bound,
                r.cap_hits
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String, HarnessError> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: &'static str,
            config: &'a super::RegretConfig,
            scaled_gap_slope: Option<f64>,
            scaled_gap_slope_se: Option<f64>,
            rows: &'a [super::RegretRow],
        }
        to_json(&Envelope {
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            scaled_gap_slope: self.scaled_gap_slope,
            scaled_gap_slope_se: self.scaled_gap_slope_se,
            rows: &self.rows,
        })
    }
}

// ---- Trace summaries ----

/// Descriptive statistics of one recorded trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptSummary {
    pub prompt_id: String,
    pub samples: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl PromptSummary {
    pub fn write_csv<W: Write>(writer: &mut W, rows: &[PromptSummary]) -> Result<(), HarnessError> {
        writeln!(writer, "prompt_id,samples,mean,median,min,max")?;
        for r in rows {
            writeln!(
                writer,
                "{},{},{},{},{},{}",
                r.prompt_id, r.samples, r.mean, r.median, r.min, r.max
            )?;
        }
        Ok(())
    }
}

pub fn summarize_traces(traces: &[RewardTrace]) -> Result<Vec<PromptSummary>, HarnessError> {
    traces
        .iter()
        .map(|t| {
            validate(t).map_err(HarnessError::InvalidConfig)?;
            let n = t.rewards.len();
            Ok(PromptSummary {
                prompt_id: t.prompt_id.clone(),
                samples: n,
                mean: t.rewards.iter().sum::<f64>() / n as f64,
                median: median_of(t.rewards.clone()).expect("validated nonempty"),
                min: t.rewards.iter().cloned().fold(f64::INFINITY, f64::min),
                max: t.rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}
