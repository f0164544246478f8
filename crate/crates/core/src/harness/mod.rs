//! Experiment harness: recorded reward traces, deterministic permutation
//! seeding, synthetic fixture generation, the four benchmark experiments
//! (profit, win rate, save ratio, regret), and report serialization.
//!
//! Everything in here is replay-exact: given the same inputs, seeds, and
//! configuration, every experiment produces byte-identical CSV and JSON
//! output. No wall-clock state, no global RNG, no iteration-order-dependent
//! aggregation.

mod experiments;
mod fixture;
mod report;
mod seeding;
mod trace;

pub use experiments::{
    log_spaced, run_profit_experiment, run_regret_experiment, run_save_ratio_experiment,
    run_winrate_experiment, ProfitConfig, ProfitCostSummary, ProfitReport, ProfitRow,
    RegretConfig, RegretReport, RegretRow, SaveRatioConfig, SaveRatioReport, SaveRatioRow,
    SaveRatioTargetSummary, WinRateConfig, WinRateCostSummary, WinRateReport, WinRateRow,
};
pub use fixture::{generate_fixture, FixtureConfig, FixtureLayout};
pub use report::{summarize_traces, PromptSummary};
pub use seeding::{derive_seed, ground_truth_benchmark, permuted_rewards, splitmix64};
pub use trace::{read_traces, read_traces_from_path, write_traces, write_traces_to_path, RewardTrace};

use crate::adaptive::AdaptiveError;
use crate::distributions::DistributionError;
use crate::policies::PolicyError;
use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    Io(std::io::Error),
    /// Malformed input data; `line` is 1-based within the offending file.
    Parse { line: usize, message: String },
    InvalidConfig(String),
    Adaptive(AdaptiveError),
    Policy(PolicyError),
    Distribution(DistributionError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Io(e) => write!(f, "i/o error: {e}"),
            HarnessError::Parse { line, message } => write!(f, "line {line}: {message}"),
            HarnessError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            HarnessError::Adaptive(e) => write!(f, "{e}"),
            HarnessError::Policy(e) => write!(f, "{e}"),
            HarnessError::Distribution(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Io(e) => Some(e),
            HarnessError::Adaptive(e) => Some(e),
            HarnessError::Policy(e) => Some(e),
            HarnessError::Distribution(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<AdaptiveError> for HarnessError {
    fn from(e: AdaptiveError) -> Self {
        HarnessError::Adaptive(e)
    }
}

impl From<PolicyError> for HarnessError {
    fn from(e: PolicyError) -> Self {
        HarnessError::Policy(e)
    }
}

impl From<DistributionError> for HarnessError {
    fn from(e: DistributionError) -> Self {
        HarnessError::Distribution(e)
    }
}
