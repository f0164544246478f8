//! Command-line interface.
//!
//! Subcommands: `faircap` (price a distribution's fair cap), `simulate`
//! (replay a policy run by run), `experiment` (the four benchmark
//! experiments), `gen-fixture` (synthetic trace corpus), and `summary`
//! (per-prompt descriptive statistics).
//!
//! Data goes to stdout, diagnostics to stderr. Exit codes:
//!
//! * 0: success
//! * 2: bad usage, bad flag values, or a malformed input/config file
//! * 3: the requested cost admits no finite fair cap
//! * 4: a recorded trace ran out mid-policy
//! * 5: an output file could not be written
//! * 1: anything else (e.g. the cap solver failed to converge)
//!
//! Experiment configuration can come from a flat `key = value` file
//! (`#` comments and blank lines allowed); explicit flags override file
//! values, which override the defaults.

use crate::adaptive::{run_adaptive, run_target_ar, AdaptiveConfig, TargetArConfig};
use crate::distributions::{fair_cap_with_intervals, FairCapError, RewardDistribution};
use crate::harness::{
    derive_seed, generate_fixture, permuted_rewards, read_traces_from_path,
    run_profit_experiment, run_regret_experiment, run_save_ratio_experiment,
    run_winrate_experiment, summarize_traces, write_traces, write_traces_to_path, FixtureConfig,
    FixtureLayout, HarnessError, ProfitConfig, PromptSummary, RegretConfig, RewardTrace,
    SaveRatioConfig, WinRateConfig,
};
use crate::policies::{run_fixed_n, run_ucb_pandora, run_weitzman, PolicyError, RewardStream};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable naming the default directory for experiment output.
pub const OUT_DIR_ENV: &str = "PANDORA_OUT_DIR";

// ---- Failure plumbing ----

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

type CliResult = Result<(), Failure>;

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

/// Input-side harness errors: malformed files and bad configuration.
fn input_failure(e: HarnessError) -> Failure {
    fail(2, e.to_string())
}

/// Output-side errors: the run succeeded but a result could not be written.
fn output_failure(e: impl std::fmt::Display) -> Failure {
    fail(5, format!("write failed: {e}"))
}

fn faircap_failure(e: FairCapError) -> Failure {
    match e {
        FairCapError::InvalidCost(_) => fail(2, e.to_string()),
        FairCapError::NoFiniteSolution { .. } => fail(3, e.to_string()),
        FairCapError::DidNotConverge { .. } => fail(1, e.to_string()),
    }
}

fn policy_failure(e: PolicyError) -> Failure {
    match e {
        PolicyError::StreamExhausted { .. } => fail(4, e.to_string()),
        other => fail(2, other.to_string()),
    }
}

// ---- Argument declarations ----

#[derive(Parser)]
#[command(
    name = "pandora",
    version,
    about = "Optimal stopping policies and benchmarks for costly reward sampling"
)]
struct Cli {
    /// Worker threads for experiments (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the cap solving E[(v - cap)+] = cost for a distribution.
    Faircap {
        /// Distribution spec: exp:RATE, uniform:LO,HI, point:VALUE, or
        /// shiftedexp:SHIFT,SCALE.
        #[arg(long)]
        dist: String,
        #[arg(long)]
        cost: f64,
        /// Grid resolution for distributions without a closed form.
        #[arg(long, default_value_t = 5000)]
        intervals: usize,
    },
    /// Run a stopping policy and print one JSON line per run.
    Simulate(SimulateArgs),
    /// Run a benchmark experiment; writes <name>.csv and <name>_summary.json.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCmd,
    },
    /// Generate a synthetic JSONL trace corpus.
    GenFixture {
        /// Grid shape datasets x llms x reward_models x prompts x samples.
        #[arg(long)]
        layout: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Range of ln(reward location), written lo,hi.
        #[arg(long)]
        loc_range: Option<String>,
        /// Range of the benchmark-relative tail scale, written lo,hi.
        #[arg(long)]
        tail_scale_range: Option<String>,
        /// Percentile the tail scale is calibrated against.
        #[arg(long)]
        alpha: Option<f64>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print per-prompt descriptive statistics for a trace file as CSV.
    Summary {
        #[arg(long)]
        traces: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    /// Fixed-cap stopping (optimal when the cap is the fair cap).
    Weitzman,
    /// Optimistic stopping under an unknown distribution.
    Ucb,
    /// Draw exactly n times.
    Fixed,
    /// Adaptive best-of-n with a fitted utility cap.
    Adaptive,
    /// Stop at a target acceptance level.
    TargetAr,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    policy: PolicyKind,
    /// Synthetic source distribution (conflicts with --trace).
    #[arg(long, conflicts_with = "trace")]
    dist: Option<String>,
    /// Recorded JSONL trace file; runs replay permuted orderings of it.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Prompt to replay from --trace (default: the first one).
    #[arg(long, requires = "trace")]
    prompt: Option<String>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-draw cost (weitzman, ucb, fixed, adaptive).
    #[arg(long)]
    cost: Option<f64>,
    /// Stopping cap for weitzman (default: the source's fair cap).
    #[arg(long)]
    cap: Option<f64>,
    /// Confidence level (ucb, adaptive, target-ar).
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Draw count for the fixed policy.
    #[arg(long)]
    n: Option<usize>,
    /// Value of a fully accepted draw (adaptive).
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    /// Benchmark percentile (adaptive, target-ar).
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    /// Draws before the adaptive stopping rules engage.
    #[arg(long, default_value_t = 8)]
    warmup: usize,
    /// Utility-cap grid resolution (adaptive).
    #[arg(long, default_value_t = 5000)]
    intervals: usize,
    /// Target acceptance level (target-ar).
    #[arg(long)]
    target: Option<f64>,
    /// Hard draw cap per run.
    #[arg(long)]
    max_draws: Option<usize>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Adaptive stopping vs the best fixed budget in hindsight.
    Profit(TraceExperimentArgs),
    /// Adaptive stopping vs a fixed budget matched to its average spend.
    Winrate(TraceExperimentArgs),
    /// Draws saved at a target acceptance level vs the matched fixed budget.
    Saveratio(TraceExperimentArgs),
    /// Optimistic-policy regret across exponential rates.
    Regret(RegretArgs),
}

/// Flags shared by the three trace-replay experiments. Every override is
/// optional; unset values fall back to the config file, then the defaults.
#[derive(Args)]
struct TraceExperimentArgs {
    /// JSONL trace corpus.
    #[arg(long)]
    traces: PathBuf,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $PANDORA_OUT_DIR, then `.`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    costs: Option<Vec<f64>>,
    /// Target acceptance levels (saveratio only).
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<f64>>,
    #[arg(long)]
    orderings: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Args)]
struct RegretArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Per-rate costs (default: e^-1 / rate for each rate).
    #[arg(long, value_delimiter = ',')]
    costs: Option<Vec<f64>>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_draws: Option<usize>,
}

// ---- Entry point ----

/// Parses `std::env::args`, runs the selected command, and returns the
/// process exit code. Usage errors print to stderr and exit 2 via clap.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore a second initialization (e.g. under tests); the pool can
        // only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = match cli.command {
        Command::Faircap { dist, cost, intervals } => cmd_faircap(&dist, cost, intervals),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Experiment { kind } => cmd_experiment(kind),
        Command::GenFixture { layout, seed, loc_range, tail_scale_range, alpha, out } => {
            cmd_gen_fixture(&layout, seed, loc_range, tail_scale_range, alpha, out)
        }
        Command::Summary { traces } => cmd_summary(&traces),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

// ---- faircap ----

fn parse_dist(spec: &str) -> Result<RewardDistribution, Failure> {
    spec.parse::<RewardDistribution>().map_err(|e| fail(2, e.to_string()))
}

fn cmd_faircap(dist: &str, cost: f64, intervals: usize) -> CliResult {
    let dist = parse_dist(dist)?;
    let result = fair_cap_with_intervals(&dist, cost, intervals).map_err(faircap_failure)?;
    println!("{}", result.cap);
    Ok(())
}

// ---- simulate ----

enum Source {
    Dist(RewardDistribution),
    Trace(RewardTrace),
}

impl Source {
    fn stream(&self, seed: u64, run: u64, max_draws: Option<usize>) -> RewardStream {
        let mut stream = match self {
            Source::Dist(dist) => {
                RewardStream::from_distribution(dist.clone(), derive_seed(seed, "run", run))
            }
            Source::Trace(trace) => RewardStream::from_trace(permuted_rewards(trace, seed, run)),
        };
        if let Some(cap) = max_draws {
            stream = stream.with_draw_cap(cap);
        }
        stream
    }
}

fn require<T: Copy>(value: Option<T>, what: &str) -> Result<T, Failure> {
    value.ok_or_else(|| fail(2, format!("--{what} is required for this policy")))
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    if args.runs == 0 {
        return Err(fail(2, "--runs must be at least 1"));
    }
    let source = match (&args.dist, &args.trace) {
        (Some(spec), None) => Source::Dist(parse_dist(spec)?),
        (None, Some(path)) => {
            let traces = read_traces_from_path(path).map_err(input_failure)?;
            let trace = match &args.prompt {
                Some(id) => traces
                    .into_iter()
                    .find(|t| &t.prompt_id == id)
                    .ok_or_else(|| fail(2, format!("no prompt `{id}` in trace file")))?,
                None => {
                    traces.into_iter().next().ok_or_else(|| fail(2, "trace file is empty"))?
                }
            };
            Source::Trace(trace)
        }
        _ => return Err(fail(2, "exactly one of --dist or --trace is required")),
    };
    let policy_name = match args.policy {
        PolicyKind::Weitzman => "weitzman",
        PolicyKind::Ucb => "ucb",
        PolicyKind::Fixed => "fixed",
        PolicyKind::Adaptive => "adaptive",
        PolicyKind::TargetAr => "target-ar",
    };
    // Weitzman with no explicit cap prices the source's fair cap up front.
    let weitzman_cap = match (args.policy, args.cap) {
        (PolicyKind::Weitzman, Some(cap)) => Some(cap),
        (PolicyKind::Weitzman, None) => match &source {
            Source::Dist(dist) => {
                let cost = require(args.cost, "cost")?;
                Some(
                    fair_cap_with_intervals(dist, cost, args.intervals)
                        .map_err(faircap_failure)?
                        .cap,
                )
            }
            Source::Trace(_) => {
                return Err(fail(2, "--cap is required for weitzman on a recorded trace"))
            }
        },
        _ => None,
    };
    let mut total_draws = 0.0;
    let mut total_payoff = 0.0;
    for run in 0..args.runs {
        let mut stream = source.stream(args.seed, run as u64, args.max_draws);
        let line = match args.policy {
            PolicyKind::Weitzman | PolicyKind::Ucb | PolicyKind::Fixed => {
                let cost = require(args.cost, "cost")?;
                let outcome = match args.policy {
                    PolicyKind::Weitzman => {
                        run_weitzman(&mut stream, weitzman_cap.expect("priced above"), cost)
                    }
                    PolicyKind::Ucb => run_ucb_pandora(&mut stream, cost, args.delta),
                    _ => run_fixed_n(&mut stream, require(args.n, "n")?, cost),
                }
                .map_err(policy_failure)?;
                total_draws += outcome.stopping_time as f64;
                total_payoff += outcome.payoff;
                json!({
                    "run": run,
                    "policy": policy_name,
                    "stopping_time": outcome.stopping_time,
                    "max_reward": outcome.max_reward,
                    "payoff": outcome.payoff,
                    "stopped_by_cap": outcome.stopped_by_cap,
                })
            }
            PolicyKind::Adaptive | PolicyKind::TargetAr => {
                let outcome = if args.policy == PolicyKind::Adaptive {
                    let config = AdaptiveConfig {
                        budget: args.budget,
                        cost: require(args.cost, "cost")?,
                        alpha: args.alpha,
                        delta: args.delta,
                        warmup: args.warmup,
                        intervals: args.intervals,
                    };
                    run_adaptive(&mut stream, &config)
                } else {
                    let config = TargetArConfig {
                        target: require(args.target, "target")?,
                        alpha: args.alpha,
                        delta: args.delta,
                        warmup: args.warmup,
                    };
                    run_target_ar(&mut stream, &config)
                }
                .map_err(|e| fail(2, e.to_string()))?;
                total_draws += outcome.stopping_time as f64;
                total_payoff += outcome.utility_payoff.unwrap_or(0.0);
                json!({
                    "run": run,
                    "policy": policy_name,
                    "stopping_time": outcome.stopping_time,
                    "max_reward": outcome.max_reward,
                    "kappa_estimate": outcome.kappa_estimate,
                    "acceptance_of_max": outcome.acceptance_of_max,
                    "utility_payoff": outcome.utility_payoff,
                    "stopped_by_cap": outcome.stopped_by_cap,
                })
            }
        };
        println!("{line}");
    }
    let runs = args.runs as f64;
    println!(
        "{}",
        json!({
            "aggregate": true,
            "policy": policy_name,
            "runs": args.runs,
            "seed": args.seed,
            "mean_stopping_time": total_draws / runs,
            "mean_payoff": total_payoff / runs,
        })
    );
    Ok(())
}

// ---- flat config files ----

/// Parses a flat `key = value` file. `#` starts a comment; blank lines are
/// skipped. Returns pairs in file order with their line numbers.
fn parse_flat_config(text: &str) -> Result<Vec<(usize, String, String)>, Failure> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| fail(2, format!("config line {line}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(fail(2, format!("config line {line}: empty key or value")));
        }
        pairs.push((line, key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

fn config_pairs(path: &Option<PathBuf>) -> Result<Vec<(usize, String, String)>, Failure> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| fail(2, format!("cannot read {}: {e}", p.display())))?;
            parse_flat_config(&text)
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| fail(2, format!("config line {line}: bad value for `{key}`: {e}")))
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, Failure> {
    value
        .split(',')
        .map(|part| parse_value::<f64>(line, key, part.trim()))
        .collect()
}

fn unknown_key(line: usize, key: &str) -> Failure {
    fail(2, format!("config line {line}: unknown key `{key}`"))
}

// ---- experiments ----

fn resolve_out_dir(flag: Option<PathBuf>, env: Option<OsString>) -> PathBuf {
    flag.or_else(|| env.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn write_report_files(
    out_dir: &Path,
    name: &str,
    csv: &[u8],
    summary: &str,
) -> Result<(), Failure> {
    fs::create_dir_all(out_dir).map_err(output_failure)?;
    fs::write(out_dir.join(format!("{name}.csv")), csv).map_err(output_failure)?;
    fs::write(out_dir.join(format!("{name}_summary.json")), summary.as_bytes())
        .map_err(output_failure)?;
    Ok(())
}

fn load_traces(path: &Path) -> Result<Vec<RewardTrace>, Failure> {
    read_traces_from_path(path).map_err(input_failure)
}

fn cmd_experiment(kind: ExperimentCmd) -> CliResult {
    match kind {
        ExperimentCmd::Profit(args) => {
            let mut config = ProfitConfig::default();
            for (line, key, value) in config_pairs(&args.config)? {
                match key.as_str() {
                    "budget" => config.budget = parse_value(line, &key, &value)?,
                    "costs" => config.costs = parse_list(line, &key, &value)?,
                    "orderings" => config.orderings = parse_value(line, &key, &value)?,
                    "seed" => config.base_seed = parse_value(line, &key, &value)?,
                    "alpha" => config.alpha = parse_value(line, &key, &value)?,
                    "delta" => config.delta = parse_value(line, &key, &value)?,
                    "warmup" => config.warmup = parse_value(line, &key, &value)?,
                    "intervals" => config.intervals = parse_value(line, &key, &value)?,
                    _ => return Err(unknown_key(line, &key)),
                }
            }
            if args.targets.is_some() {
                return Err(fail(2, "--targets only applies to saveratio"));
            }
            override_costed_config(
                &args,
                &mut config.budget,
                &mut config.costs,
                &mut config.orderings,
                &mut config.base_seed,
                &mut config.alpha,
                &mut config.delta,
                &mut config.warmup,
                &mut config.intervals,
            );
            let traces = load_traces(&args.traces)?;
            let report = run_profit_experiment(&traces, &config).map_err(input_failure)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(output_failure)?;
            let summary = report.summary_json().map_err(output_failure)?;
            let out_dir = resolve_out_dir(args.out_dir, std::env::var_os(OUT_DIR_ENV));
            write_report_files(&out_dir, "profit", &csv, &summary)?;
            println!("{summary}");
            Ok(())
        }
        ExperimentCmd::Winrate(args) => {
            let mut config = WinRateConfig::default();
            for (line, key, value) in config_pairs(&args.config)? {
                match key.as_str() {
                    "budget" => config.budget = parse_value(line, &key, &value)?,
                    "costs" => config.costs = parse_list(line, &key, &value)?,
                    "orderings" => config.orderings = parse_value(line, &key, &value)?,
                    "seed" => config.base_seed = parse_value(line, &key, &value)?,
                    "alpha" => config.alpha = parse_value(line, &key, &value)?,
                    "delta" => config.delta = parse_value(line, &key, &value)?,
                    "warmup" => config.warmup = parse_value(line, &key, &value)?,
                    "intervals" => config.intervals = parse_value(line, &key, &value)?,
                    _ => return Err(unknown_key(line, &key)),
                }
            }
            if args.targets.is_some() {
                return Err(fail(2, "--targets only applies to saveratio"));
            }
            override_costed_config(
                &args,
                &mut config.budget,
                &mut config.costs,
                &mut config.orderings,
                &mut config.base_seed,
                &mut config.alpha,
                &mut config.delta,
                &mut config.warmup,
                &mut config.intervals,
            );
            let traces = load_traces(&args.traces)?;
            let report = run_winrate_experiment(&traces, &config).map_err(input_failure)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(output_failure)?;
            let summary = report.summary_json().map_err(output_failure)?;
            let out_dir = resolve_out_dir(args.out_dir, std::env::var_os(OUT_DIR_ENV));
            write_report_files(&out_dir, "winrate", &csv, &summary)?;
            println!("{summary}");
            Ok(())
        }
        ExperimentCmd::Saveratio(args) => {
            let mut config = SaveRatioConfig::default();
            for (line, key, value) in config_pairs(&args.config)? {
                match key.as_str() {
                    "targets" => config.targets = parse_list(line, &key, &value)?,
                    "orderings" => config.orderings = parse_value(line, &key, &value)?,
                    "seed" => config.base_seed = parse_value(line, &key, &value)?,
                    "alpha" => config.alpha = parse_value(line, &key, &value)?,
                    "delta" => config.delta = parse_value(line, &key, &value)?,
                    "warmup" => config.warmup = parse_value(line, &key, &value)?,
                    _ => return Err(unknown_key(line, &key)),
                }
            }
            if args.costs.is_some() || args.budget.is_some() || args.intervals.is_some() {
                return Err(fail(2, "saveratio takes --targets, not --costs/--budget/--intervals"));
            }
            if let Some(targets) = args.targets.clone() {
                config.targets = targets;
            }
            if let Some(v) = args.orderings {
                config.orderings = v;
            }
            if let Some(v) = args.seed {
                config.base_seed = v;
            }
            if let Some(v) = args.alpha {
                config.alpha = v;
            }
            if let Some(v) = args.delta {
                config.delta = v;
            }
            if let Some(v) = args.warmup {
                config.warmup = v;
            }
            let traces = load_traces(&args.traces)?;
            let report = run_save_ratio_experiment(&traces, &config).map_err(input_failure)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(output_failure)?;
            let summary = report.summary_json().map_err(output_failure)?;
            let out_dir = resolve_out_dir(args.out_dir, std::env::var_os(OUT_DIR_ENV));
            write_report_files(&out_dir, "saveratio", &csv, &summary)?;
            println!("{summary}");
            Ok(())
        }
        ExperimentCmd::Regret(args) => {
            let mut config = RegretConfig::default();
            for (line, key, value) in config_pairs(&args.config)? {
                match key.as_str() {
                    "rates" => config.rates = parse_list(line, &key, &value)?,
                    "costs" => config.costs = Some(parse_list(line, &key, &value)?),
                    "replicas" => config.replicas = parse_value(line, &key, &value)?,
                    "delta" => config.delta = parse_value(line, &key, &value)?,
                    "seed" => config.base_seed = parse_value(line, &key, &value)?,
                    "max_draws" => config.max_draws = parse_value(line, &key, &value)?,
                    _ => return Err(unknown_key(line, &key)),
                }
            }
            if let Some(rates) = args.rates {
                config.rates = rates;
            }
            if let Some(costs) = args.costs {
                config.costs = Some(costs);
            }
            if let Some(v) = args.replicas {
                config.replicas = v;
            }
            if let Some(v) = args.delta {
                config.delta = v;
            }
            if let Some(v) = args.seed {
                config.base_seed = v;
            }
            if let Some(v) = args.max_draws {
                config.max_draws = v;
            }
            let report = run_regret_experiment(&config).map_err(input_failure)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(output_failure)?;
            let summary = report.summary_json().map_err(output_failure)?;
            let out_dir = resolve_out_dir(args.out_dir, std::env::var_os(OUT_DIR_ENV));
            write_report_files(&out_dir, "regret", &csv, &summary)?;
            println!("{summary}");
            Ok(())
        }
    }
}

/// Applies the flag overrides shared by the profit and winrate experiments,
/// whose configs have identical fields.
#[allow(clippy::too_many_arguments)]
fn override_costed_config(
    args: &TraceExperimentArgs,
    budget: &mut f64,
    costs: &mut Vec<f64>,
    orderings: &mut usize,
    seed: &mut u64,
    alpha: &mut f64,
    delta: &mut f64,
    warmup: &mut usize,
    intervals: &mut usize,
) {
    if let Some(v) = args.budget {
        *budget = v;
    }
    if let Some(v) = args.costs.clone() {
        *costs = v;
    }
    if let Some(v) = args.orderings {
        *orderings = v;
    }
    if let Some(v) = args.seed {
        *seed = v;
    }
    if let Some(v) = args.alpha {
        *alpha = v;
    }
    if let Some(v) = args.delta {
        *delta = v;
    }
    if let Some(v) = args.warmup {
        *warmup = v;
    }
    if let Some(v) = args.intervals {
        *intervals = v;
    }
}

// ---- gen-fixture ----

fn parse_pair(what: &str, text: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(fail(2, format!("--{what} expects `lo,hi`, got `{text}`")));
    }
    let lo = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| fail(2, format!("--{what}: bad lower bound: {e}")))?;
    let hi = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|e| fail(2, format!("--{what}: bad upper bound: {e}")))?;
    Ok((lo, hi))
}

fn cmd_gen_fixture(
    layout: &str,
    seed: u64,
    loc_range: Option<String>,
    tail_scale_range: Option<String>,
    alpha: Option<f64>,
    out: Option<PathBuf>,
) -> CliResult {
    let layout: FixtureLayout = layout.parse().map_err(input_failure)?;
    let mut config = FixtureConfig::new(layout, seed);
    if let Some(text) = loc_range {
        config.loc_range = parse_pair("loc-range", &text)?;
    }
    if let Some(text) = tail_scale_range {
        config.tail_scale_range = parse_pair("tail-scale-range", &text)?;
    }
    if let Some(a) = alpha {
        config.reference_alpha = a;
    }
    let traces = generate_fixture(&config).map_err(input_failure)?;
    match out {
        Some(path) => write_traces_to_path(&path, &traces).map_err(output_failure)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_traces(&mut lock, &traces).map_err(output_failure)?;
        }
    }
    Ok(())
}

// ---- summary ----

fn cmd_summary(traces: &Path) -> CliResult {
    let traces = load_traces(traces)?;
    let rows = summarize_traces(&traces).map_err(input_failure)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    PromptSummary::write_csv(&mut lock, &rows).map_err(output_failure)?;
    Ok(())
}
