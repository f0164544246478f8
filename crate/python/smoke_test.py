#!/usr/bin/env python3
"""Smoke test for the pandora_py extension module.

Build the module first:

    cargo build -p pandora-py --release

then run this script with any Python 3:

    python3 python/smoke_test.py

It locates the compiled shared object under target/, imports it, and checks
a handful of known values and determinism properties end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libpandora_py.so", "pandora_py.so", "libpandora_py.dylib")
    ]
    built = next((p for p in candidates if p.is_file()), None)
    if built is None:
        sys.exit(
            "pandora_py is not built; run `cargo build -p pandora-py --release` first"
        )
    staging = Path(tempfile.mkdtemp(prefix="pandora_py_"))
    shutil.copy2(built, staging / "pandora_py.so")
    sys.path.insert(0, str(staging))
    import pandora_py

    return pandora_py


def close(a, b, tol=1e-12):
    return math.isfinite(a) and abs(a - b) <= tol * max(1.0, abs(b))


def main():
    pp = import_module()
    print(f"imported pandora_py {pp.__version__}")

    # Fair caps with known solutions.
    exp1 = pp.Distribution.exponential(1.0)
    cap = pp.fair_cap(exp1, math.exp(-1.0))
    assert cap.method == "analytic", cap
    assert close(cap.cap, 1.0), cap
    cap = pp.fair_cap(pp.Distribution.point_mass(5.0), 0.25)
    assert cap.cap == 4.75, cap
    cap = pp.fair_cap(pp.Distribution.uniform(0.0, 1.0), 0.125)
    assert cap.method == "riemann", cap
    assert close(cap.cap, 0.5, 1e-3), cap
    try:
        pp.fair_cap(exp1, 2.0)
        raise AssertionError("cost above the mean must fail")
    except ValueError:
        pass

    # Distribution helpers.
    se = pp.Distribution.shifted_exponential(1.0, 2.0)
    assert close(se.percentile(0.99), 10.210340371976184), se.percentile(0.99)
    assert close(se.mean(), 3.0)
    assert pp.Distribution.parse("exp:2.0").mean() == 0.5
    draws = exp1.sample(42, 100)
    assert len(draws) == 100 and draws == exp1.sample(42, 100)
    assert min(draws) >= 0.0

    # Confidence helpers against pinned values.
    assert close(pp.radius(1_000_000, 0.05), 0.013708370049726988)
    assert close(pp.radius(2000, 0.1), 0.23365382770894086)
    assert pp.radius(1, 0.1) == 0.5  # clamped
    assert close(pp.ucb_fair_cap(1.0, 0.5, math.exp(-1.0)), 2.1081976621622466)
    assert close(pp.exploration_width(1.0, 0.1), 1.6)
    assert close(pp.regret_bound(1.0, math.exp(-1.0), 0.1), 1880.8716325905506, 1e-9)
    try:
        pp.radius(0, 0.1)
        raise AssertionError("n = 0 must fail")
    except ValueError:
        pass

    # Acceptance curve.
    assert pp.acceptance_rate(2.0, 3.0) == 1.0
    assert close(pp.acceptance_rate(2.0, 2.0 - math.log(3.0)), 0.5)
    assert close(pp.utility(1.0, 1.0, 0.7), 0.7)

    # Tail fitting on a pinned batch: median exp(1.5), mean excess
    # (e^2 + e^3)/2 - e^1.5.
    fit = pp.fit_tail([0.0, 1.0, 2.0, 3.0], 0.1)
    assert close(fit.location, 4.481689070338065), fit
    assert close(fit.mean_excess, 9.255607440721094), fit
    assert fit.samples == 4 and fit.exceedance_count == 2
    assert fit.benchmark_upper(0.99) > fit.benchmark(0.99)
    priced = fit.utility_cap(fit.benchmark(0.99), cost=0.01)
    assert 0.0 < priced.cap < 1.0 and not priced.immediate, priced

    # Policies: a point mass stops on the first draw at its fair cap.
    out = pp.run_weitzman(pp.Distribution.point_mass(5.0), cap=4.75, cost=0.25)
    assert out.stopping_time == 1 and out.payoff == 4.75, out

    # Recorded traces replay in order; overrunning them raises.
    out = pp.run_fixed_n([1.0, 3.0, 2.0], n=3, cost=0.5)
    assert out.max_reward == 3.0 and close(out.payoff, 1.5), out
    try:
        pp.run_fixed_n([1.0, 3.0, 2.0], n=4, cost=0.5)
        raise AssertionError("overrunning a trace must fail")
    except RuntimeError:
        pass

    # Seeded policies are reproducible and respect draw caps.
    a = pp.run_ucb_pandora(exp1, cost=0.05, seed=11)
    b = pp.run_ucb_pandora(exp1, cost=0.05, seed=11)
    assert (a.stopping_time, a.payoff) == (b.stopping_time, b.payoff)
    capped = pp.run_ucb_pandora(exp1, cost=1e-9, seed=11, max_draws=50)
    assert capped.stopped_by_cap and capped.stopping_time == 50, capped

    out = pp.run_adaptive(exp1, cost=0.001, seed=3)
    again = pp.run_adaptive(exp1, cost=0.001, seed=3)
    assert out.stopping_time >= 8 and out.kappa_estimate is not None, out
    assert 0.0 < out.acceptance_of_max <= 1.0
    assert (out.stopping_time, out.utility_payoff) == (
        again.stopping_time,
        again.utility_payoff,
    )

    out = pp.run_target_ar(exp1, target=0.9, seed=4, max_draws=4096)
    assert out.utility_payoff is None, out
    assert out.stopped_by_cap or out.acceptance_of_max >= 0.0

    print("smoke test passed")


if __name__ == "__main__":
    main()
