//! Reward distributions and the fair-cap solver.
//!
//! A box's fair cap is the threshold `tau` at which the expected clipped
//! surplus of one more draw exactly pays for the draw:
//!
//! ```text
//! E[(v - tau)+] = c
//! ```
//!
//! `partial_expectation` evaluates the left-hand side, `fair_cap` inverts it.
//! Exponential and point-mass rewards invert in closed form; everything else
//! goes through a midpoint Riemann sum (default 5000 intervals, integrating up
//! to the 1 - 1e-7 quantile) wrapped in bisection over
//! `[essential infimum, upper quantile]`.
//!
//! All sampling is inverse-CDF on caller-provided RNG state, so a seeded
//! ChaCha stream reproduces draws exactly across runs and platforms.

use rand::Rng;
use std::fmt;
use std::str::FromStr;

/// Default Riemann interval count for the numeric fair-cap path.
pub const DEFAULT_INTERVALS: usize = 5000;

/// Integration and bisection both stop at the (1 - UPPER_TAIL_MASS) quantile;
/// the neglected tail carries at most UPPER_TAIL_MASS of clipped surplus mass.
const UPPER_TAIL_MASS: f64 = 1e-7;

/// Bisection accepts a cap once the residual drops below this fraction of the
/// cost, or once the bracket collapses (relative width 1e-9).
const RESIDUAL_REL_TOL: f64 = 1e-3;
const BRACKET_REL_TOL: f64 = 1e-9;
const MAX_BISECT_ITERS: u32 = 200;

/// Solved caps must land within 1% of the cost; anything worse is reported as
/// a convergence failure instead of a bad answer.
const RESIDUAL_REL_LIMIT: f64 = 1e-2;

// ---- Errors ----

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionError {
    /// Construction rejected: parameter out of domain.
    InvalidParameter(String),
    /// A distribution spec string could not be parsed.
    Parse(String),
    /// Percentile level outside [0, 1].
    InvalidLevel(f64),
}

impl fmt::Display for DistributionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            DistributionError::Parse(msg) => write!(f, "invalid distribution spec: {msg}"),
            DistributionError::InvalidLevel(a) => {
                write!(f, "percentile level must lie in [0, 1], got {a}")
            }
        }
    }
}

impl std::error::Error for DistributionError {}

#[derive(Debug, Clone, PartialEq)]
pub enum FairCapError {
    /// Cost must be positive and finite.
    InvalidCost(f64),
    /// No cap at or above the essential infimum exists: the per-draw cost
    /// swallows the whole expected surplus (`cost >= E[v] - essinf`).
    NoFiniteSolution { cost: f64, surplus: f64 },
    /// Bisection exhausted its budget without meeting the residual bound.
    DidNotConverge { cap: f64, residual: f64 },
}

impl fmt::Display for FairCapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairCapError::InvalidCost(c) => write!(f, "cost must be positive and finite, got {c}"),
            FairCapError::NoFiniteSolution { cost, surplus } => write!(
                f,
                "no finite fair cap: cost {cost} is not below the expected surplus {surplus}"
            ),
            FairCapError::DidNotConverge { cap, residual } => write!(
                f,
                "fair-cap bisection did not converge (cap {cap}, residual {residual})"
            ),
        }
    }
}

impl std::error::Error for FairCapError {}

// ---- RewardDistribution ----

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Exponential { rate: f64 },
    ShiftedExponential { shift: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { value: f64 },
    Empirical { sorted: Vec<f64> },
}

/// A reward law for a single box. Construct through the checked constructors;
/// invalid parameters are rejected up front so every instance is usable.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardDistribution {
    kind: Kind,
}

impl RewardDistribution {
    /// Exponential with the given rate: mean `1/rate`, support `[0, inf)`.
    pub fn exponential(rate: f64) -> Result<Self, DistributionError> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(DistributionError::InvalidParameter(format!(
                "exponential rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { kind: Kind::Exponential { rate } })
    }

    /// Shifted exponential in mean parameterization: support `[shift, inf)`,
    /// CDF `1 - exp(-(x - shift)/scale)`, mean excess `scale`.
    pub fn shifted_exponential(shift: f64, scale: f64) -> Result<Self, DistributionError> {
        if !shift.is_finite() {
            return Err(DistributionError::InvalidParameter(format!(
                "shift must be finite, got {shift}"
            )));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(DistributionError::InvalidParameter(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { kind: Kind::ShiftedExponential { shift, scale } })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistributionError> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(DistributionError::InvalidParameter(format!(
                "uniform bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { kind: Kind::Uniform { lo, hi } })
    }

    pub fn point_mass(value: f64) -> Result<Self, DistributionError> {
        if !value.is_finite() {
            return Err(DistributionError::InvalidParameter(format!(
                "point mass must be finite, got {value}"
            )));
        }
        Ok(Self { kind: Kind::PointMass { value } })
    }

    /// Empirical law over observed rewards (each with weight `1/n`).
    pub fn empirical(samples: &[f64]) -> Result<Self, DistributionError> {
        if samples.is_empty() {
            return Err(DistributionError::InvalidParameter(
                "empirical distribution needs at least one sample".into(),
            ));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(DistributionError::InvalidParameter(format!(
                "empirical samples must be finite, got {bad}"
            )));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        Ok(Self { kind: Kind::Empirical { sorted } })
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::ShiftedExponential { shift, scale } => shift + scale,
            Kind::Uniform { lo, hi } => 0.5 * (lo + hi),
            Kind::PointMass { value } => *value,
            Kind::Empirical { sorted } => sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }

    /// Largest lower bound of the support.
    pub fn essential_infimum(&self) -> f64 {
        match &self.kind {
            Kind::Exponential { .. } => 0.0,
            Kind::ShiftedExponential { shift, .. } => *shift,
            Kind::Uniform { lo, .. } => *lo,
            Kind::PointMass { value } => *value,
            Kind::Empirical { sorted } => sorted[0],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Kind::ShiftedExponential { shift, scale } => {
                if x <= *shift {
                    0.0
                } else {
                    -(-(x - shift) / scale).exp_m1()
                }
            }
            Kind::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Kind::PointMass { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Empirical { sorted } => {
                let below = sorted.partition_point(|&s| s <= x);
                below as f64 / sorted.len() as f64
            }
        }
    }

    /// Left-continuous inverse CDF: `inf { x : F(x) >= alpha }`.
    ///
    /// `alpha = 0` returns the essential infimum; `alpha = 1` returns the
    /// essential supremum, which is `+inf` for unbounded kinds. On `Empirical`
    /// this is the lower order statistic at rank `ceil(alpha * n)`.
    pub fn percentile(&self, alpha: f64) -> Result<f64, DistributionError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(DistributionError::InvalidLevel(alpha));
        }
        Ok(match &self.kind {
            Kind::Exponential { rate } => -(-alpha).ln_1p() / rate,
            Kind::ShiftedExponential { shift, scale } => shift - scale * (-alpha).ln_1p(),
            Kind::Uniform { lo, hi } => lo + alpha * (hi - lo),
            Kind::PointMass { value } => *value,
            Kind::Empirical { sorted } => {
                let n = sorted.len();
                let rank = ((alpha * n as f64).ceil() as usize).clamp(1, n);
                sorted[rank - 1]
            }
        })
    }

    /// Expected clipped surplus `E[(v - cap)+]` of a single draw.
    pub fn partial_expectation(&self, cap: f64) -> f64 {
        assert!(cap.is_finite(), "cap must be finite, got {cap}");
        match &self.kind {
            Kind::Exponential { rate } => {
                if cap <= 0.0 {
                    1.0 / rate - cap
                } else {
                    (-rate * cap).exp() / rate
                }
            }
            Kind::ShiftedExponential { shift, scale } => {
                if cap <= *shift {
                    shift + scale - cap
                } else {
                    scale * (-(cap - shift) / scale).exp()
                }
            }
            Kind::Uniform { lo, hi } => {
                if cap <= *lo {
                    0.5 * (lo + hi) - cap
                } else if cap >= *hi {
                    0.0
                } else {
                    (hi - cap) * (hi - cap) / (2.0 * (hi - lo))
                }
            }
            Kind::PointMass { value } => (value - cap).max(0.0),
            Kind::Empirical { sorted } => {
                let n = sorted.len() as f64;
                sorted.iter().map(|&s| (s - cap).max(0.0)).sum::<f64>() / n
            }
        }
    }

    /// One inverse-CDF draw. `PointMass` consumes no RNG state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => {
                let u: f64 = rng.random();
                -(-u).ln_1p() / rate
            }
            Kind::ShiftedExponential { shift, scale } => {
                let u: f64 = rng.random();
                shift - scale * (-u).ln_1p()
            }
            Kind::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + u * (hi - lo)
            }
            Kind::PointMass { value } => *value,
            Kind::Empirical { sorted } => sorted[rng.random_range(0..sorted.len())],
        }
    }

    /// The same law with every reward multiplied by `factor > 0`. Fair caps
    /// commute with this: `fair_cap(d.scale_by(s), s * c) == s * fair_cap(d, c)`.
    pub fn scale_by(&self, factor: f64) -> Result<Self, DistributionError> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(DistributionError::InvalidParameter(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        Ok(match &self.kind {
            Kind::Exponential { rate } => RewardDistribution {
                kind: Kind::Exponential { rate: rate / factor },
            },
            Kind::ShiftedExponential { shift, scale } => RewardDistribution {
                kind: Kind::ShiftedExponential { shift: shift * factor, scale: scale * factor },
            },
            Kind::Uniform { lo, hi } => RewardDistribution {
                kind: Kind::Uniform { lo: lo * factor, hi: hi * factor },
            },
            Kind::PointMass { value } => RewardDistribution {
                kind: Kind::PointMass { value: value * factor },
            },
            Kind::Empirical { sorted } => RewardDistribution {
                kind: Kind::Empirical { sorted: sorted.iter().map(|v| v * factor).collect() },
            },
        })
    }

    fn density(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::Exponential { rate } => {
                Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() })
            }
            Kind::ShiftedExponential { shift, scale } => Some(if x < *shift {
                0.0
            } else {
                (-(x - shift) / scale).exp() / scale
            }),
            Kind::Uniform { lo, hi } => Some(if x < *lo || x > *hi {
                0.0
            } else {
                1.0 / (hi - lo)
            }),
            Kind::PointMass { .. } | Kind::Empirical { .. } => None,
        }
    }

    /// Upper end of the numeric integration range: the (1 - 1e-7) quantile,
    /// which is the maximum sample for `Empirical` of realistic size.
    fn integration_upper_bound(&self) -> f64 {
        self.percentile(1.0 - UPPER_TAIL_MASS)
            .expect("level in range")
    }

    /// Midpoint-rule estimate of `E[(v - cap)+]` for continuous kinds; the
    /// exact atom sum for discrete kinds, where a midpoint grid would be
    /// meaningless.
    pub fn partial_expectation_riemann(&self, cap: f64, intervals: usize) -> f64 {
        assert!(intervals > 0, "need at least one interval");
        if self.density(cap).is_none() {
            return self.partial_expectation(cap);
        }
        let hi = self.integration_upper_bound();
        if cap >= hi {
            return 0.0;
        }
        let h = (hi - cap) / intervals as f64;
        let mut acc = 0.0;
        for i in 0..intervals {
            let x = cap + (i as f64 + 0.5) * h;
            let d = self.density(x).expect("continuous kind");
            acc += (x - cap) * d;
        }
        acc * h
    }
}

impl fmt::Display for RewardDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Exponential { rate } => write!(f, "exp:{rate}"),
            Kind::ShiftedExponential { shift, scale } => write!(f, "shiftedexp:{shift},{scale}"),
            Kind::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            Kind::PointMass { value } => write!(f, "point:{value}"),
            Kind::Empirical { sorted } => write!(f, "empirical:{} samples", sorted.len()),
        }
    }
}

/// Parses `exp:RATE`, `uniform:LO,HI`, `point:VALUE`, `shiftedexp:SHIFT,SCALE`.
impl FromStr for RewardDistribution {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| DistributionError::Parse(format!("expected NAME:ARGS, got `{s}`")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| DistributionError::Parse(format!("bad number `{a}` in `{s}`")))
            })
            .collect::<Result<_, _>>()?;
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(DistributionError::Parse(format!(
                    "`{name}` takes {k} argument(s), got {}",
                    nums.len()
                )))
            }
        };
        match name {
            "exp" => {
                want(1)?;
                RewardDistribution::exponential(nums[0])
            }
            "uniform" => {
                want(2)?;
                RewardDistribution::uniform(nums[0], nums[1])
            }
            "point" => {
                want(1)?;
                RewardDistribution::point_mass(nums[0])
            }
            "shiftedexp" => {
                want(2)?;
                RewardDistribution::shifted_exponential(nums[0], nums[1])
            }
            other => Err(DistributionError::Parse(format!(
                "unknown distribution `{other}` (expected exp, uniform, point, shiftedexp)"
            ))),
        }
    }
}

// ---- Fair-cap solving ----

/// A box pricing instance: which law, and what each draw costs.
#[derive(Debug, Clone, PartialEq)]
pub struct FairCapProblem {
    pub distribution: RewardDistribution,
    pub cost: f64,
}

impl FairCapProblem {
    pub fn new(distribution: RewardDistribution, cost: f64) -> Result<Self, FairCapError> {
        if !cost.is_finite() || cost <= 0.0 {
            return Err(FairCapError::InvalidCost(cost));
        }
        Ok(Self { distribution, cost })
    }

    pub fn solve(&self) -> Result<FairCapResult, FairCapError> {
        fair_cap(&self.distribution, self.cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairCapMethod {
    Analytic,
    Riemann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairCapResult {
    /// The solved threshold `tau`.
    pub cap: f64,
    /// `|E[(v - cap)+] - cost|` under the solver's own evaluator.
    pub residual: f64,
    /// Bisection iterations (0 for closed forms).
    pub iterations: u32,
    pub method: FairCapMethod,
    /// Riemann interval count actually used (sample count for `Empirical`).
    pub intervals: usize,
}

/// Solves `E[(v - cap)+] = cost` with the default interval count.
pub fn fair_cap(dist: &RewardDistribution, cost: f64) -> Result<FairCapResult, FairCapError> {
    fair_cap_with_intervals(dist, cost, DEFAULT_INTERVALS)
}

/// Solves `E[(v - cap)+] = cost`.
///
/// Closed forms: exponential (`cap = ln(1/(rate * cost)) / rate`, requiring
/// `cost < mean`) and point mass (`cap = value - cost`, always solvable for
/// positive cost). All other kinds require `cost < mean - essinf` and run
/// bisection on the Riemann evaluator over `[essinf, q(1 - 1e-7)]`.
pub fn fair_cap_with_intervals(
    dist: &RewardDistribution,
    cost: f64,
    intervals: usize,
) -> Result<FairCapResult, FairCapError> {
    if !cost.is_finite() || cost <= 0.0 {
        return Err(FairCapError::InvalidCost(cost));
    }
    match &dist.kind {
        Kind::PointMass { value } => {
            let cap = value - cost;
            Ok(FairCapResult {
                cap,
                residual: (dist.partial_expectation(cap) - cost).abs(),
                iterations: 0,
                method: FairCapMethod::Analytic,
                intervals: 0,
            })
        }
        Kind::Exponential { rate } => {
            let mean = 1.0 / rate;
            if cost >= mean {
                return Err(FairCapError::NoFiniteSolution { cost, surplus: mean });
            }
            let cap = (1.0 / (rate * cost)).ln() / rate;
            Ok(FairCapResult {
                cap,
                residual: (dist.partial_expectation(cap) - cost).abs(),
                iterations: 0,
                method: FairCapMethod::Analytic,
                intervals: 0,
            })
        }
        _ => {
            let surplus = dist.mean() - dist.essential_infimum();
            if cost >= surplus {
                return Err(FairCapError::NoFiniteSolution { cost, surplus });
            }
            bisect_fair_cap(dist, cost, intervals)
        }
    }
}

fn bisect_fair_cap(
    dist: &RewardDistribution,
    cost: f64,
    intervals: usize,
) -> Result<FairCapResult, FairCapError> {
    let discrete = dist.density(0.0).is_none();
    let eval = |cap: f64| {
        if discrete {
            dist.partial_expectation(cap)
        } else {
            dist.partial_expectation_riemann(cap, intervals)
        }
    };
    let mut lo = dist.essential_infimum();
    let mut hi = dist.integration_upper_bound();
    let mut cap = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_BISECT_ITERS {
        iterations += 1;
        cap = 0.5 * (lo + hi);
        let pe = eval(cap);
        residual = (pe - cost).abs();
        if residual <= RESIDUAL_REL_TOL * cost {
            break;
        }
        if pe > cost {
            lo = cap; // surplus too rich: raise the cap
        } else {
            hi = cap;
        }
        if hi - lo <= BRACKET_REL_TOL * (1.0 + cap.abs()) {
            cap = 0.5 * (lo + hi);
            residual = (eval(cap) - cost).abs();
            break;
        }
    }
    if residual > RESIDUAL_REL_LIMIT * cost {
        return Err(FairCapError::DidNotConverge { cap, residual });
    }
    let used = if discrete {
        match &dist.kind {
            Kind::Empirical { sorted } => sorted.len(),
            _ => 0,
        }
    } else {
        intervals
    };
    Ok(FairCapResult {
        cap,
        residual,
        iterations,
        method: FairCapMethod::Riemann,
        intervals: used,
    })
}
