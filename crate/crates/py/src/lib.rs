//! Python bindings for the core stopping-policy library.
//!
//! The module mirrors the Rust API in a Python-friendly shape: reward
//! distributions and fitted tail models are classes, policies are free
//! functions that accept either a [`Distribution`](PyDistribution) (sampled
//! with an explicit seed) or a plain sequence of recorded rewards. All
//! randomness is seeded, so every call is reproducible.
//!
//! Configuration errors raise `ValueError`; running a policy off the end of
//! a finite recorded trace raises `RuntimeError`.

use pandora_core::adaptive::{
    self, fair_cap_of_utility_with_intervals, fit_tail, run_adaptive, run_target_ar,
    AdaptiveConfig, AdaptiveOutcome, StreamingTailStats, TailFit, TargetArConfig,
};
use pandora_core::confidence;
use pandora_core::distributions::{fair_cap_with_intervals, FairCapMethod, RewardDistribution};
use pandora_core::policies::{
    run_fixed_n, run_ucb_pandora, run_weitzman, PolicyError, PolicyOutcome, RewardStream,
};
use pyo3::exceptions::{PyRuntimeError, PyTypeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn policy_err(e: PolicyError) -> PyErr {
    match e {
        PolicyError::StreamExhausted { .. } => PyRuntimeError::new_err(e.to_string()),
        other => value_err(other),
    }
}

// ---- Distribution ----

/// A reward law the solvers and simulated policies can draw from.
#[pyclass(frozen, skip_from_py_object, name = "Distribution", module = "pandora_py")]
#[derive(Clone)]
struct PyDistribution {
    inner: RewardDistribution,
}

#[pymethods]
impl PyDistribution {
    /// Exponential with the given rate (mean `1 / rate`).
    #[staticmethod]
    fn exponential(rate: f64) -> PyResult<Self> {
        Ok(Self { inner: RewardDistribution::exponential(rate).map_err(value_err)? })
    }

    /// Exponential with mean `scale`, shifted to start at `shift`.
    #[staticmethod]
    fn shifted_exponential(shift: f64, scale: f64) -> PyResult<Self> {
        Ok(Self { inner: RewardDistribution::shifted_exponential(shift, scale).map_err(value_err)? })
    }

    /// Uniform on `[lo, hi]`.
    #[staticmethod]
    fn uniform(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self { inner: RewardDistribution::uniform(lo, hi).map_err(value_err)? })
    }

    /// All mass on a single value.
    #[staticmethod]
    fn point_mass(value: f64) -> PyResult<Self> {
        Ok(Self { inner: RewardDistribution::point_mass(value).map_err(value_err)? })
    }

    /// Uniform over a recorded sample.
    #[staticmethod]
    fn empirical(samples: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: RewardDistribution::empirical(&samples).map_err(value_err)? })
    }

    /// Parse a spec string such as `"exp:1.0"`, `"uniform:0,1"`,
    /// `"point:4.0"`, or `"shiftedexp:1.0,2.0"`.
    #[staticmethod]
    fn parse(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: spec.parse().map_err(value_err)? })
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    /// The `alpha` quantile, `alpha` strictly inside (0, 1).
    fn percentile(&self, alpha: f64) -> PyResult<f64> {
        self.inner.percentile(alpha).map_err(value_err)
    }

    /// `E[(v - cap)+]`.
    fn partial_expectation(&self, cap: f64) -> f64 {
        self.inner.partial_expectation(cap)
    }

    /// Draw `count` seeded values; the same seed always yields the same
    /// sequence.
    #[pyo3(signature = (seed, count = 1))]
    fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..count).map(|_| self.inner.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Distribution({:?})", self.inner)
    }
}

// ---- Result classes ----

/// Outcome of a cap-style stopping run.
#[pyclass(frozen, get_all, name = "PolicyOutcome", module = "pandora_py")]
struct PyPolicyOutcome {
    stopping_time: usize,
    max_reward: f64,
    payoff: f64,
    stopped_by_cap: bool,
}

#[pymethods]
impl PyPolicyOutcome {
    fn __repr__(&self) -> String {
        format!(
            "PolicyOutcome(stopping_time={}, max_reward={}, payoff={}, stopped_by_cap={})",
            self.stopping_time, self.max_reward, self.payoff, self.stopped_by_cap
        )
    }
}

impl From<PolicyOutcome> for PyPolicyOutcome {
    fn from(o: PolicyOutcome) -> Self {
        Self {
            stopping_time: o.stopping_time,
            max_reward: o.max_reward,
            payoff: o.payoff,
            stopped_by_cap: o.stopped_by_cap,
        }
    }
}

/// Outcome of an adaptive (fitted-model) stopping run.
#[pyclass(frozen, get_all, name = "AdaptiveOutcome", module = "pandora_py")]
struct PyAdaptiveOutcome {
    stopping_time: usize,
    max_reward: f64,
    kappa_estimate: Option<f64>,
    acceptance_of_max: Option<f64>,
    utility_payoff: Option<f64>,
    stopped_by_cap: bool,
}

#[pymethods]
impl PyAdaptiveOutcome {
    fn __repr__(&self) -> String {
        format!(
            "AdaptiveOutcome(stopping_time={}, max_reward={}, kappa_estimate={:?}, \
             acceptance_of_max={:?}, utility_payoff={:?}, stopped_by_cap={})",
            self.stopping_time,
            self.max_reward,
            self.kappa_estimate,
            self.acceptance_of_max,
            self.utility_payoff,
            self.stopped_by_cap
        )
    }
}

impl From<AdaptiveOutcome> for PyAdaptiveOutcome {
    fn from(o: AdaptiveOutcome) -> Self {
        Self {
            stopping_time: o.stopping_time,
            max_reward: o.max_reward,
            kappa_estimate: o.kappa_estimate,
            acceptance_of_max: o.acceptance_of_max,
            utility_payoff: o.utility_payoff,
            stopped_by_cap: o.stopped_by_cap,
        }
    }
}

/// A solved fair cap together with solver diagnostics.
#[pyclass(frozen, get_all, name = "FairCap", module = "pandora_py")]
struct PyFairCap {
    cap: f64,
    residual: f64,
    iterations: u32,
    method: String,
    intervals: usize,
}

#[pymethods]
impl PyFairCap {
    fn __repr__(&self) -> String {
        format!("FairCap(cap={}, method='{}')", self.cap, self.method)
    }
}

/// A priced continuation threshold under a fitted tail model.
#[pyclass(frozen, get_all, name = "UtilityCap", module = "pandora_py")]
struct PyUtilityCap {
    cap: f64,
    expected_utility: f64,
    immediate: bool,
}

#[pymethods]
impl PyUtilityCap {
    fn __repr__(&self) -> String {
        format!(
            "UtilityCap(cap={}, expected_utility={}, immediate={})",
            self.cap, self.expected_utility, self.immediate
        )
    }
}

// ---- Tail fitting ----

/// An exponential tail model fitted to observed rewards, with a confidence
/// band on the mean excess.
#[pyclass(frozen, name = "TailFit", module = "pandora_py")]
struct PyTailFit {
    inner: TailFit,
}

#[pymethods]
impl PyTailFit {
    #[getter]
    fn location(&self) -> f64 {
        self.inner.location
    }

    #[getter]
    fn mean_excess(&self) -> f64 {
        self.inner.mean_excess
    }

    #[getter]
    fn mean_excess_lcb(&self) -> f64 {
        self.inner.mean_excess_lcb
    }

    #[getter]
    fn mean_excess_ucb(&self) -> f64 {
        self.inner.mean_excess_ucb
    }

    #[getter]
    fn scaler(&self) -> f64 {
        self.inner.scaler
    }

    #[getter]
    fn samples(&self) -> usize {
        self.inner.samples
    }

    #[getter]
    fn exceedance_count(&self) -> usize {
        self.inner.exceedance_count
    }

    /// Estimated benchmark log-reward at percentile `alpha` (shrunk model).
    fn benchmark(&self, alpha: f64) -> PyResult<f64> {
        adaptive::benchmark_estimate(&self.inner, alpha).map_err(value_err)
    }

    /// Benchmark under the widened model; never below `benchmark(alpha)`.
    fn benchmark_upper(&self, alpha: f64) -> PyResult<f64> {
        adaptive::benchmark_estimate_upper(&self.inner, alpha).map_err(value_err)
    }

    /// Price continued sampling: the utility threshold at which one more
    /// draw stops paying for itself.
    #[pyo3(signature = (kappa, cost, budget = 1.0, intervals = 5000))]
    fn utility_cap(
        &self,
        kappa: f64,
        cost: f64,
        budget: f64,
        intervals: usize,
    ) -> PyResult<PyUtilityCap> {
        let priced = fair_cap_of_utility_with_intervals(&self.inner, kappa, budget, cost, intervals)
            .map_err(value_err)?;
        Ok(PyUtilityCap {
            cap: priced.cap,
            expected_utility: priced.expected_utility,
            immediate: priced.immediate,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "TailFit(location={}, mean_excess={}, samples={})",
            self.inner.location, self.inner.mean_excess, self.inner.samples
        )
    }
}

/// Fit the tail model to a batch of rewards. Needs at least two distinct
/// values so the mean excess above the median is positive.
#[pyfunction(name = "fit_tail")]
#[pyo3(signature = (values, delta = 0.1))]
fn py_fit_tail(values: Vec<f64>, delta: f64) -> PyResult<PyTailFit> {
    let mut stats = StreamingTailStats::new();
    for v in values {
        stats.insert(v).map_err(value_err)?;
    }
    Ok(PyTailFit { inner: fit_tail(&stats, delta).map_err(value_err)? })
}

// ---- Scalar helpers ----

/// Anytime confidence radius for a mean estimate after `n` draws.
#[pyfunction(name = "radius")]
fn py_radius(n: u64, delta: f64) -> PyResult<f64> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PyValueError::new_err(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(confidence::radius(n, delta))
}

/// Optimistic fair cap from an estimated mean: `m ln(m / cost)` with
/// `m = mean * (1 + radius)`, or `inf` when the inflated mean cannot cover
/// the cost.
#[pyfunction(name = "ucb_fair_cap")]
fn py_ucb_fair_cap(mean: f64, radius: f64, cost: f64) -> PyResult<f64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(PyValueError::new_err(format!("mean must be finite and >= 0, got {mean}")));
    }
    if !radius.is_finite() || radius < 0.0 {
        return Err(PyValueError::new_err(format!("radius must be finite and >= 0, got {radius}")));
    }
    if !cost.is_finite() || cost <= 0.0 {
        return Err(PyValueError::new_err(format!("cost must be positive, got {cost}")));
    }
    Ok(confidence::ucb_fair_cap(mean, radius, cost))
}

/// Width of the band the true fair cap occupies below its optimistic
/// estimate.
#[pyfunction(name = "exploration_width")]
fn py_exploration_width(cap: f64, radius: f64) -> PyResult<f64> {
    if !cap.is_finite() || cap < 0.0 {
        return Err(PyValueError::new_err(format!("cap must be finite and >= 0, got {cap}")));
    }
    if !radius.is_finite() || radius < 0.0 {
        return Err(PyValueError::new_err(format!("radius must be finite and >= 0, got {radius}")));
    }
    Ok(confidence::exploration_width(cap, radius))
}

/// Summed regret bound for the optimistic policy on an exponential law.
#[pyfunction(name = "regret_bound")]
#[pyo3(signature = (rate, cost, delta, max_terms = 100_000))]
fn py_regret_bound(rate: f64, cost: f64, delta: f64, max_terms: u64) -> PyResult<f64> {
    Ok(confidence::regret_series(rate, cost, delta, max_terms).map_err(value_err)?.bound)
}

/// Acceptance of a log-reward `value` against benchmark `kappa`: 1 at or
/// above the benchmark, decaying smoothly below it.
#[pyfunction(name = "acceptance_rate")]
fn py_acceptance_rate(kappa: f64, value: f64) -> PyResult<f64> {
    if kappa.is_nan() || value.is_nan() {
        return Err(PyValueError::new_err("kappa and value must not be NaN"));
    }
    Ok(adaptive::acceptance_rate(kappa, value))
}

/// `budget * acceptance_rate(kappa, value)`.
#[pyfunction(name = "utility")]
fn py_utility(kappa: f64, value: f64, budget: f64) -> PyResult<f64> {
    if kappa.is_nan() || value.is_nan() || !budget.is_finite() {
        return Err(PyValueError::new_err("arguments must be finite"));
    }
    Ok(adaptive::utility(kappa, value, budget))
}

/// Solve `E[(v - cap)+] = cost` for the given distribution.
#[pyfunction(name = "fair_cap")]
#[pyo3(signature = (dist, cost, intervals = 5000))]
fn py_fair_cap(dist: PyRef<PyDistribution>, cost: f64, intervals: usize) -> PyResult<PyFairCap> {
    let result = fair_cap_with_intervals(&dist.inner, cost, intervals).map_err(value_err)?;
    Ok(PyFairCap {
        cap: result.cap,
        residual: result.residual,
        iterations: result.iterations,
        method: match result.method {
            FairCapMethod::Analytic => "analytic".to_string(),
            FairCapMethod::Riemann => "riemann".to_string(),
        },
        intervals: result.intervals,
    })
}

// ---- Policy runners ----

/// Build a reward stream from either a Distribution (seeded draws) or a
/// sequence of recorded rewards (replayed in order; the seed is unused).
fn stream_from(
    source: &Bound<'_, PyAny>,
    seed: u64,
    max_draws: Option<usize>,
) -> PyResult<RewardStream> {
    let mut stream = if let Ok(dist) = source.extract::<PyRef<PyDistribution>>() {
        RewardStream::from_distribution(dist.inner.clone(), seed)
    } else if let Ok(values) = source.extract::<Vec<f64>>() {
        RewardStream::from_trace(values)
    } else {
        return Err(PyTypeError::new_err(
            "source must be a Distribution or a sequence of floats",
        ));
    };
    if let Some(cap) = max_draws {
        stream = stream.with_draw_cap(cap);
    }
    Ok(stream)
}

/// Draw until a reward reaches `cap`, paying `cost` per draw.
#[pyfunction(name = "run_weitzman")]
#[pyo3(signature = (source, cap, cost, seed = 0, max_draws = None))]
fn py_run_weitzman(
    source: &Bound<'_, PyAny>,
    cap: f64,
    cost: f64,
    seed: u64,
    max_draws: Option<usize>,
) -> PyResult<PyPolicyOutcome> {
    let mut stream = stream_from(source, seed, max_draws)?;
    Ok(run_weitzman(&mut stream, cap, cost).map_err(policy_err)?.into())
}

/// Optimistic stopping when the reward law is unknown.
#[pyfunction(name = "run_ucb_pandora")]
#[pyo3(signature = (source, cost, delta = 0.1, seed = 0, max_draws = None))]
fn py_run_ucb_pandora(
    source: &Bound<'_, PyAny>,
    cost: f64,
    delta: f64,
    seed: u64,
    max_draws: Option<usize>,
) -> PyResult<PyPolicyOutcome> {
    let mut stream = stream_from(source, seed, max_draws)?;
    Ok(run_ucb_pandora(&mut stream, cost, delta).map_err(policy_err)?.into())
}

/// Draw exactly `n` times and keep the maximum.
#[pyfunction(name = "run_fixed_n")]
#[pyo3(signature = (source, n, cost, seed = 0, max_draws = None))]
fn py_run_fixed_n(
    source: &Bound<'_, PyAny>,
    n: usize,
    cost: f64,
    seed: u64,
    max_draws: Option<usize>,
) -> PyResult<PyPolicyOutcome> {
    let mut stream = stream_from(source, seed, max_draws)?;
    Ok(run_fixed_n(&mut stream, n, cost).map_err(policy_err)?.into())
}

/// Adaptive best-of-n: refit the tail after each draw and stop when the
/// best draw's utility clears the priced continuation threshold.
#[pyfunction(name = "run_adaptive")]
#[pyo3(signature = (source, cost, budget = 1.0, alpha = 0.99, delta = 0.1, warmup = 8,
                    intervals = 5000, seed = 0, max_draws = None))]
#[allow(clippy::too_many_arguments)]
fn py_run_adaptive(
    source: &Bound<'_, PyAny>,
    cost: f64,
    budget: f64,
    alpha: f64,
    delta: f64,
    warmup: usize,
    intervals: usize,
    seed: u64,
    max_draws: Option<usize>,
) -> PyResult<PyAdaptiveOutcome> {
    let mut stream = stream_from(source, seed, max_draws)?;
    let config = AdaptiveConfig { budget, cost, alpha, delta, warmup, intervals };
    Ok(run_adaptive(&mut stream, &config).map_err(value_err)?.into())
}

/// Draw until the best draw's estimated acceptance reaches `target`.
#[pyfunction(name = "run_target_ar")]
#[pyo3(signature = (source, target, alpha = 0.99, delta = 0.1, warmup = 8, seed = 0,
                    max_draws = None))]
fn py_run_target_ar(
    source: &Bound<'_, PyAny>,
    target: f64,
    alpha: f64,
    delta: f64,
    warmup: usize,
    seed: u64,
    max_draws: Option<usize>,
) -> PyResult<PyAdaptiveOutcome> {
    let mut stream = stream_from(source, seed, max_draws)?;
    let config = TargetArConfig { target, alpha, delta, warmup };
    Ok(run_target_ar(&mut stream, &config).map_err(value_err)?.into())
}

// ---- Module ----

#[pymodule]
fn pandora_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyPolicyOutcome>()?;
    m.add_class::<PyAdaptiveOutcome>()?;
    m.add_class::<PyFairCap>()?;
    m.add_class::<PyUtilityCap>()?;
    m.add_class::<PyTailFit>()?;
    m.add_function(wrap_pyfunction!(py_fair_cap, m)?)?;
    m.add_function(wrap_pyfunction!(py_fit_tail, m)?)?;
    m.add_function(wrap_pyfunction!(py_radius, m)?)?;
    m.add_function(wrap_pyfunction!(py_ucb_fair_cap, m)?)?;
    m.add_function(wrap_pyfunction!(py_exploration_width, m)?)?;
    m.add_function(wrap_pyfunction!(py_regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_acceptance_rate, m)?)?;
    m.add_function(wrap_pyfunction!(py_utility, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_weitzman, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_ucb_pandora, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_fixed_n, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_adaptive, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_target_ar, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
