//! Anytime-valid confidence machinery for the UCB stopping policy.
//!
//! Everything here is deterministic arithmetic: a shrinking confidence radius
//! for the running mean, the optimistic fair cap built from it, the
//! exploration width that prices one optimistic draw, and the summed regret
//! bound those widths imply for exponential rewards.

use std::fmt;

/// Terms beyond the budget are dropped; the result is flagged `truncated`
/// when the last computed term still carries more than this fraction of the
/// running sum.
const TRUNCATION_REL_TOL: f64 = 1e-9;

/// Default term budget for [`regret_series`].
pub const DEFAULT_SERIES_TERMS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceError {
    /// Failure probability must lie strictly inside (0, 1).
    InvalidDelta(f64),
    /// The per-draw cost meets or exceeds the mean reward, so the fair cap
    /// (and with it the regret series) has no finite value.
    UnprofitableCost { rate: f64, cost: f64 },
    /// Series term budget must be at least one.
    EmptyTermBudget,
}

impl fmt::Display for ConfidenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfidenceError::InvalidDelta(d) => {
                write!(f, "delta must lie strictly between 0 and 1, got {d}")
            }
            ConfidenceError::UnprofitableCost { rate, cost } => write!(
                f,
                "cost {cost} is not below the mean reward {} at rate {rate}",
                1.0 / rate
            ),
            ConfidenceError::EmptyTermBudget => write!(f, "series needs at least one term"),
        }
    }
}

impl std::error::Error for ConfidenceError {}

/// Relative confidence radius after `n` draws at failure probability `delta`:
///
/// ```text
/// r = min{ 1/2, sqrt((6/n) ln(2 n (n+1) / delta)) }
/// ```
///
/// The `n (n+1)` factor spends `delta` across all sample sizes at once, so
/// the radius is valid simultaneously for every `n` (anytime-valid).
///
/// # Panics
///
/// On `n == 0` or `delta` outside (0, 1); both are caller bugs.
pub fn radius(n: u64, delta: f64) -> f64 {
    assert!(n >= 1, "radius needs at least one sample");
    assert!(
        delta > 0.0 && delta < 1.0,
        "delta must lie strictly between 0 and 1, got {delta}"
    );
    let nf = n as f64;
    let raw = ((6.0 / nf) * (2.0 * nf * (nf + 1.0) / delta).ln()).sqrt();
    raw.min(0.5)
}

/// Optimistic fair cap for exponential rewards from a mean estimate.
///
/// Inflates the estimate to `m = mean_estimate * (1 + radius)` and prices the
/// cap as if the true mean were `m`:
///
/// ```text
/// cap = m * ln(m / cost)
/// ```
///
/// When the inflated mean cannot even cover the cost (`m <= cost`) there is
/// no finite optimistic cap yet; the policy should keep drawing, signalled by
/// `f64::INFINITY`.
pub fn ucb_fair_cap(mean_estimate: f64, radius: f64, cost: f64) -> f64 {
    debug_assert!(cost > 0.0 && cost.is_finite());
    debug_assert!(mean_estimate >= 0.0 && radius >= 0.0);
    let m = mean_estimate * (1.0 + radius);
    if m <= cost {
        return f64::INFINITY;
    }
    m * (m / cost).ln()
}

/// Width of the exploration corridor above the true fair cap after the mean
/// estimate has tightened to relative radius `r`: `16 * cap * r`.
pub fn exploration_width(cap: f64, radius: f64) -> f64 {
    assert!(cap.is_finite() && cap >= 0.0, "cap must be finite and nonnegative");
    assert!(radius >= 0.0);
    16.0 * cap * radius
}

/// Largest exponential rate for which a run at per-draw cost `cost` is
/// covered by the regret guarantee: `rate <= 1 / (cost * e)`.
pub fn max_admissible_rate(cost: f64) -> f64 {
    1.0 / (cost * std::f64::consts::E)
}

pub fn is_admissible(rate: f64, cost: f64) -> bool {
    rate > 0.0 && cost > 0.0 && rate <= max_admissible_rate(cost)
}

/// A summed regret bound: expected shortfall of the UCB policy against the
/// known-distribution fair-cap policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretBound {
    pub bound: f64,
    /// Terms actually summed (the series is cut early once terms underflow).
    pub terms_used: u64,
    /// True when the budget ran out while terms still mattered.
    pub truncated: bool,
}

/// Sums the per-step regret series for exponential rewards with the given
/// `rate`, per-draw `cost`, and confidence level `delta`:
///
/// ```text
/// sum over n >= 1 of  sigma_n * (1 - F(cap)) * (F(cap + sigma_n)^(n-1) - F(cap)^(n-1))
/// ```
///
/// where `cap` is the true fair cap, `F` the reward CDF, and `sigma_n` the
/// exploration width at the radius after `n` draws. Each term prices the
/// event that the policy is still exploring at step `n` and stops on a draw
/// inside the corridor. Terms vanish to exact zero once the corridor
/// probabilities underflow, at which point summation stops.
pub fn regret_series(
    rate: f64,
    cost: f64,
    delta: f64,
    max_terms: u64,
) -> Result<RegretBound, ConfidenceError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ConfidenceError::InvalidDelta(delta));
    }
    if max_terms == 0 {
        return Err(ConfidenceError::EmptyTermBudget);
    }
    if !(rate > 0.0 && cost > 0.0 && rate.is_finite() && cost.is_finite()) || rate * cost >= 1.0 {
        return Err(ConfidenceError::UnprofitableCost { rate, cost });
    }
    let cap = (1.0 / (rate * cost)).ln() / rate;
    let cdf = |x: f64| -(-rate * x).exp_m1();
    let f_cap = cdf(cap);
    let tail = 1.0 - f_cap;
    let mut sum = 0.0;
    let mut terms_used = 0;
    let mut last_term = 0.0;
    let mut seen_positive = false;
    for n in 1..=max_terms {
        let sigma = exploration_width(cap, radius(n, delta));
        let exploring = cdf(cap + sigma).powi((n - 1) as i32) - f_cap.powi((n - 1) as i32);
        let term = sigma * tail * exploring;
        sum += term;
        terms_used = n;
        last_term = term;
        if term > 0.0 {
            seen_positive = true;
        } else if seen_positive {
            break;
        }
    }
    Ok(RegretBound {
        bound: sum,
        terms_used,
        truncated: last_term > TRUNCATION_REL_TOL * sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E_INV: f64 = 0.36787944117144233;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    // Pinned against a 40-digit arbitrary-precision evaluation of the same
    // formulas (computed offline, independent of this code path).

    #[test]
    fn radius_pinned_values() {
        assert!(close(radius(1_000_000, 0.05), 0.013708370049726988, 1e-14));
        assert!(close(radius(2000, 0.05), 0.23806207750231715, 1e-14));
        assert!(close(radius(2000, 0.1), 0.23365382770894086, 1e-14));
    }

    #[test]
    fn radius_clamps_at_half_for_small_samples() {
        assert_eq!(radius(8, 0.1), 0.5);
        assert_eq!(radius(1, 0.5), 0.5);
        assert_eq!(radius(1, 1e-12), 0.5);
    }

    #[test]
    #[should_panic(expected = "at least one sample")]
    fn radius_rejects_zero_samples() {
        radius(0, 0.1);
    }

    #[test]
    #[should_panic(expected = "strictly between 0 and 1")]
    fn radius_rejects_bad_delta() {
        radius(10, 1.0);
    }

    proptest! {
        // Tighter with more data, looser with more confidence demanded.
        #[test]
        fn radius_monotone(n in 1u64..1_000_000, delta in 0.01..0.5f64) {
            prop_assert!(radius(2 * n, delta) <= radius(n, delta) + 1e-12);
            prop_assert!(radius(n, delta / 2.0) >= radius(n, delta) - 1e-12);
            let r = radius(n, delta);
            prop_assert!(r > 0.0 && r <= 0.5);
        }
    }

    #[test]
    fn ucb_cap_pinned_value() {
        // mean 1, radius 1/2, cost e^-1: 1.5 * ln(1.5 e)
        let cap = ucb_fair_cap(1.0, 0.5, E_INV);
        assert!(close(cap, 2.1081976621622466, 1e-14), "got {cap}");
    }

    #[test]
    fn ucb_cap_infinite_until_mean_covers_cost() {
        assert_eq!(ucb_fair_cap(0.3, 0.1, 0.5), f64::INFINITY);
        assert_eq!(ucb_fair_cap(0.0, 0.5, 0.1), f64::INFINITY);
        assert_eq!(ucb_fair_cap(0.5, 0.0, 0.5), f64::INFINITY);
        assert!(ucb_fair_cap(0.51, 0.0, 0.5).is_finite());
    }

    proptest! {
        // On the finite branch (inflated mean already above the cost), more
        // optimism or a cheaper draw never lowers the cap. Crossing from the
        // infinite branch is excluded: there the cap drops from the sentinel
        // to a finite value by design.
        #[test]
        fn ucb_cap_monotone(mean in 0.4..5.0f64, r in 0.0..0.5f64, cost in 0.01..0.3f64) {
            let base = ucb_fair_cap(mean, r, cost);
            prop_assert!(base.is_finite());
            prop_assert!(ucb_fair_cap(mean, r + 0.1, cost) >= base - 1e-12);
            prop_assert!(ucb_fair_cap(mean, r, cost * 0.5) >= base - 1e-12);
        }
    }

    #[test]
    fn exploration_width_is_linear() {
        assert_eq!(exploration_width(1.0, 0.5), 8.0);
        assert_eq!(exploration_width(0.0, 0.5), 0.0);
        assert_eq!(exploration_width(2.0, 0.25), 8.0);
    }

    #[test]
    fn admissibility_boundary() {
        // cost = e^-1 admits rates up to exactly 1.
        assert!((max_admissible_rate(E_INV) - 1.0).abs() < 1e-12);
        assert!(is_admissible(1.0, E_INV));
        assert!(!is_admissible(1.01, E_INV));
        assert!(!is_admissible(-1.0, E_INV));
    }

    #[test]
    fn regret_series_pinned_value() {
        // rate 1, cost e^-1, delta 0.1: 40-digit evaluation gives
        // 1880.8716325905506.
        let r = regret_series(1.0, E_INV, 0.1, DEFAULT_SERIES_TERMS).unwrap();
        assert!(close(r.bound, 1880.8716325905506, 1e-12), "got {}", r.bound);
        assert!(!r.truncated);
        // Terms underflow long before the budget.
        assert!(r.terms_used > 1000 && r.terms_used < DEFAULT_SERIES_TERMS);
    }

    #[test]
    fn regret_series_flags_truncation() {
        let short = regret_series(1.0, E_INV, 0.1, 50).unwrap();
        assert!(short.truncated);
        assert_eq!(short.terms_used, 50);
        let full = regret_series(1.0, E_INV, 0.1, DEFAULT_SERIES_TERMS).unwrap();
        assert!(short.bound < full.bound);
    }

    #[test]
    fn regret_series_partial_sums_monotone() {
        let mut prev = 0.0;
        for budget in [10, 100, 1000, 20_000] {
            let r = regret_series(0.5, 0.2, 0.05, budget).unwrap();
            assert!(r.bound >= prev);
            prev = r.bound;
        }
    }

    #[test]
    fn regret_series_rejects_bad_inputs() {
        assert!(matches!(
            regret_series(1.0, E_INV, 0.0, 100),
            Err(ConfidenceError::InvalidDelta(_))
        ));
        assert!(matches!(
            regret_series(1.0, E_INV, 0.1, 0),
            Err(ConfidenceError::EmptyTermBudget)
        ));
        // rate * cost >= 1: mean reward cannot pay for a draw.
        assert!(matches!(
            regret_series(2.0, 0.5, 0.1, 100),
            Err(ConfidenceError::UnprofitableCost { .. })
        ));
    }

    proptest! {
        // The bound scales like 1/rate along the admissibility boundary:
        // cap = 1/rate and widths are proportional to the cap, while the
        // corridor probabilities are rate-free.
        #[test]
        fn regret_series_boundary_scaling(rate in 0.25..4.0f64) {
            let cost = E_INV / rate;
            let r = regret_series(rate, cost, 0.1, DEFAULT_SERIES_TERMS).unwrap();
            let unit = regret_series(1.0, E_INV, 0.1, DEFAULT_SERIES_TERMS).unwrap();
            prop_assert!(close(r.bound * rate, unit.bound, 1e-9),
                "rate {rate}: scaled {} vs {}", r.bound * rate, unit.bound);
        }
    }
}
