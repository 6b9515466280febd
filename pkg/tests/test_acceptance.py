"""End-to-end acceptance checks, one test per stated deliverable.

Every test prints the measured numbers next to its tolerance (run pytest
with -rA to see the lines for passing tests too).  Two checks are known to
fail and are kept as stated rather than loosened; the analysis lives in the
project notes:

* the server-count sweep targets at K=4 and K=7 sit 8e-6 and 2.5e-3 outside
  the +/-0.05 window;
* the rare-unit-gap throughput diagnostic converges to (1+mu-e^{-mu})/2,
  which is mu/2 above the tabulated limit (1-e^{-mu})/2.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import t as student_t

from farm_pricer import (
    Deterministic,
    Exponential,
    ExponentialValuation,
    SystemSpec,
    TabulatedTail,
    TwoPoint,
    UniformInterval,
    UniformValuation,
    asymptotic_mu_tilde,
    blocking_prob,
    fixed_point,
    gap_bound,
    insensitivity_check,
    occupancy_poisson,
    optimize_uniform,
    revenue_uniform,
    simulate,
    solve_general,
    sweep,
    value_iteration_oracle,
)
from farm_pricer.simulator import SimConfig

VAL = ExponentialValuation(beta=1.0)


def ref_spec(k=5, lam=25.0, mu=2.0):
    return SystemSpec(servers=k, mu=mu, arrival=Exponential(rate=lam), valuation=VAL)


def test_criterion_01_poisson_prices():
    t0 = time.perf_counter()
    res = fixed_point(ref_spec())
    dt = time.perf_counter() - t0
    target = np.array([1.1743, 1.2204, 1.2954, 1.4349, 1.7726])
    gap = float(np.max(np.abs(res.prices - target)))
    print(f"criterion 01 (poisson prices): max|diff| = {gap:.2e} (tol 5e-3), {dt:.3f}s (< 1 s)")
    assert gap <= 5e-3
    assert dt < 1.0


def test_criterion_02_constant_interarrival_prices():
    t0 = time.perf_counter()
    res = solve_general(
        SystemSpec(servers=5, mu=2.0, arrival=Deterministic(rate=25.0), valuation=VAL)
    )
    dt = time.perf_counter() - t0
    target = np.array([1.1515, 1.1923, 1.2593, 1.3865, 1.7041])
    gap = float(np.max(np.abs(res.prices - target)))
    print(f"criterion 02 (constant-gap prices): max|diff| = {gap:.2e} (tol 5e-3), {dt:.3f}s (< 5 s)")
    assert gap <= 5e-3
    assert dt < 5.0


def test_criterion_03_solver_agreement_on_poisson():
    spec = ref_spec()
    ref = fixed_point(spec)
    res = solve_general(spec)
    theta_gap = abs(res.theta_star - ref.theta_star) / ref.theta_star
    price_gap = float(np.max(np.abs(res.prices - ref.prices)))
    print(
        f"criterion 03 (solver agreement): theta rel gap = {theta_gap:.2e} (tol 1e-6), "
        f"price gap = {price_gap:.2e} (tol 1e-5)"
    )
    assert theta_gap <= 1e-6
    assert price_gap <= 1e-5


def test_criterion_04_revenue_sweeps():
    legs = [
        ("lambda", [10, 15, 20, 25, 30], [3.6, 5.2, 6.5, 7.7, 8.8]),
        ("mu", [1, 2, 3, 4, 5], [6.0, 7.7, 8.5, 8.8, 9.0]),
        ("K", [3, 4, 5, 6, 7], [5.9, 6.9, 7.7, 8.3, 8.6]),
    ]
    failures = []
    for vary, grid, targets in legs:
        rows = sweep(ref_spec(), vary, grid)
        for row, want in zip(rows, targets):
            diff = abs(row.theta_star - want)
            status = "ok" if diff <= 0.05 else "MISS"
            print(
                f"criterion 04 ({vary}={row.value:g}): theta* = {row.theta_star:.6f} "
                f"vs {want} -> |diff| = {diff:.6f} (tol 0.05) {status}"
            )
            if diff > 0.05:
                failures.append(f"{vary}={row.value:g} off by {diff:.6f}")
    # the K=4 and K=7 targets are 0.050008 and 0.0525 away from the solved
    # values; kept as stated, so this assertion is expected to fire there
    assert not failures, "; ".join(failures)


def test_criterion_05_compare_tables():
    checks = [
        (5, 20.0, (6.10, 6.46, 6.54), 0.02),
        (10, 50.0, (15.13, 16.46, 16.69), 0.03),
    ]
    for k, lam, want, tol in checks:
        spec = ref_spec(k=k, lam=lam)
        uni = optimize_uniform(spec.arrival, VAL, spec.mu, k)
        r_inf = revenue_uniform(spec.arrival, VAL, spec.mu, k, uni.p_star_inf)
        theta = fixed_point(spec).theta_star
        got = (r_inf, uni.revenue_K, theta)
        gap = max(abs(g - w) for g, w in zip(got, want))
        print(
            f"criterion 05 (K={k}, lambda={lam:g}): revenues = "
            f"({got[0]:.4f}, {got[1]:.4f}, {got[2]:.4f}) vs {want}, "
            f"max|diff| = {gap:.4f} (tol {tol})"
        )
        assert gap <= tol


def test_criterion_06_sandwich_bounds():
    worst = 0.0
    rows = 0
    for vary, grid in (
        ("lambda", [10, 15, 20, 25, 30]),
        ("mu", [1, 2, 3, 4, 5]),
        ("K", [3, 4, 5, 6, 7]),
    ):
        for row in sweep(ref_spec(), vary, grid):
            if vary == "lambda":
                dist, mu, k = Exponential(rate=row.value), 2.0, 5
            elif vary == "mu":
                dist, mu, k = Exponential(rate=25.0), row.value, 5
            else:
                dist, mu, k = Exponential(rate=25.0), 2.0, int(row.value)
            lower, upper, coarse = gap_bound(dist, VAL, mu, k)
            theta = row.theta_star
            assert lower - 1e-9 <= theta <= upper + 1e-9, f"{vary}={row.value}"
            assert upper <= lower + coarse + 1e-9, f"{vary}={row.value}"
            worst = max(worst, lower - theta, theta - upper, upper - lower - coarse)
            rows += 1
    print(f"criterion 06 (sandwich): {rows} sweep rows, worst violation margin = {worst:.2e}")


def _random_poisson_spec(rng, i):
    k = int(rng.integers(2, 8))
    lam = float(rng.uniform(2.0, 40.0))
    mu = float(rng.uniform(0.5, 4.0))
    if i % 5 == 4:
        val = UniformValuation(lo=0.0, hi=float(rng.uniform(1.0, 3.0)))
    else:
        val = ExponentialValuation(beta=float(rng.uniform(0.5, 2.0)))
    return SystemSpec(servers=k, mu=mu, arrival=Exponential(rate=lam), valuation=val)


def _random_general_spec(rng, i):
    k = int(rng.integers(2, 8))
    lam = float(rng.uniform(2.0, 40.0))
    mu = float(rng.uniform(0.5, 4.0))
    kind = i % 4
    if kind == 0:
        arrival = Deterministic(rate=lam)
    elif kind == 1:
        arrival = UniformInterval.from_rate(lam)
    elif kind == 2:
        a, b = float(rng.uniform(0.2, 0.8)), float(rng.uniform(1.2, 3.0))
        arrival = TwoPoint(x1=a / lam, p1=(b - 1.0) / (b - a), x2=b / lam)
    else:
        arrival = Exponential(rate=lam)
    if i == 12:
        k = 3  # keep the slow numeric-inverse instance small
        xs = np.linspace(0.0, 4.0, 800)
        val = TabulatedTail(xs=tuple(xs), gs=tuple(np.exp(-((xs / 1.2) ** 2))))
    elif i in (5, 18):
        val = UniformValuation(lo=0.0, hi=float(rng.uniform(1.0, 3.0)))
    else:
        val = ExponentialValuation(beta=float(rng.uniform(0.5, 2.0)))
    return SystemSpec(servers=k, mu=mu, arrival=arrival, valuation=val)


def test_criterion_07_monotonicity_suite():
    rng = np.random.default_rng(20260823)
    violations = []

    specs = []
    for i in range(25):
        spec = _random_poisson_spec(rng, i)
        specs.append(spec)
        res = fixed_point(spec)
        tag = f"poisson#{i}"
        if not np.all(np.diff(res.deltas) > 0):
            violations.append(f"{tag} deltas")
        if not np.all(np.diff(res.prices) > 0):
            violations.append(f"{tag} prices")
    for i in range(25):
        spec = _random_general_spec(rng, i)
        specs.append(spec)
        res = solve_general(spec)
        tag = f"general#{i}"
        if not np.all(np.diff(res.deltas) > 0):
            violations.append(f"{tag} deltas")
        if not np.all(np.diff(res.b_vals) > 0):
            violations.append(f"{tag} b")
        if not np.all(np.diff(res.prices) > 0):
            violations.append(f"{tag} prices")

    # blocking monotone in price and in server count, on a spread of the specs
    for j, spec in enumerate(specs[::7]):
        q = spec.valuation.tail_quantile(0.05)
        ps = np.linspace(0.0, q, 8)
        pb = [blocking_prob(spec.arrival, spec.valuation, spec.mu, 4, p) for p in ps]
        if not np.all(np.diff(pb) <= 1e-12):
            violations.append(f"grid#{j} pi vs p")
        pb = [
            blocking_prob(spec.arrival, spec.valuation, spec.mu, k, float(ps[3]))
            for k in range(1, 9)
        ]
        if not np.all(np.diff(pb) <= 1e-12):
            violations.append(f"grid#{j} pi vs K")

    # normalized revenue decreasing along each sweep; prices relax with K
    for vary, grid in (
        ("lambda", [10, 15, 20, 25, 30]),
        ("mu", [1, 2, 3, 4, 5]),
        ("K", [3, 4, 5, 6, 7]),
    ):
        rows = sweep(ref_spec(), vary, grid)
        ratios = [r.ratio for r in rows]
        if not np.all(np.diff(ratios) < 0):
            violations.append(f"theta/{vary} not decreasing")
        if vary == "K":
            for a, b in zip(rows, rows[1:]):
                n = len(a.result.prices)
                if not np.all(b.result.prices[:n] <= a.result.prices + 1e-7):
                    violations.append(f"u*(K={b.value:g}) above u*(K={a.value:g})")

    print(f"criterion 07 (monotonicity): {len(violations)} violations over 50 specs "
          f"(required 0): {violations if violations else 'clean'}")
    assert not violations


def test_criterion_08_value_iteration_oracle():
    rng = np.random.default_rng(77)
    worst = 0.0
    for i in range(20):
        k = int(rng.integers(1, 7))
        lam = float(rng.uniform(1.0, 30.0))
        mu = float(rng.uniform(0.5, 4.0))
        if i % 4 == 3:
            val = UniformValuation(lo=0.0, hi=float(rng.uniform(1.0, 3.0)))
        else:
            val = ExponentialValuation(beta=float(rng.uniform(0.5, 2.0)))
        spec = SystemSpec(servers=k, mu=mu, arrival=Exponential(rate=lam), valuation=val)
        theta = fixed_point(spec).theta_star
        oracle = value_iteration_oracle(spec)
        worst = max(worst, abs(oracle - theta) / theta)
    print(f"criterion 08 (value-iteration oracle): worst rel gap = {worst:.2e} "
          f"over 20 specs (tol 1e-4)")
    assert worst <= 1e-4


def test_criterion_09_simulation_validation():
    spec = ref_spec()
    res = fixed_point(spec)
    t0 = time.perf_counter()
    out = simulate(
        SimConfig(
            spec=spec,
            prices=res.prices,
            horizon_arrivals=1_000_000,
            replications=20,
            seed=2026,
        )
    )
    dt = time.perf_counter() - t0
    pi = occupancy_poisson(spec, res.prices).pi

    ci_ok = abs(out.revenue_rate_mean - res.theta_star) <= out.revenue_rate_ci_half
    half_b = float(
        student_t.ppf(0.975, 19) * out.rep_blocking_fracs.std(ddof=1) / math.sqrt(20)
    )
    block_gap = abs(out.blocking_frac - float(pi[-1]))
    acc_z = 0.0
    for k in range(5):
        gbar = math.exp(-float(res.prices[k]))
        sig = math.sqrt(gbar * (1 - gbar) / float(out.seen_counts[k]))
        acc_z = max(acc_z, abs(out.accepted_frac_by_state[k] - gbar) / sig)
    print(
        f"criterion 09 (simulation): rate {out.revenue_rate_mean:.5f} +/- "
        f"{out.revenue_rate_ci_half:.5f} vs theta* {res.theta_star:.5f} "
        f"(CI contains: {ci_ok}); blocking gap {block_gap:.2e} vs 3*half "
        f"{3 * half_b:.2e}; worst acceptance z = {acc_z:.2f} (tol 3); {dt:.1f}s (< 60 s)"
    )
    assert ci_ok
    assert block_gap <= 3 * half_b
    assert acc_z <= 3.0
    assert dt < 60.0


def test_criterion_10_service_law_insensitivity():
    spec = ref_spec()
    prices = fixed_point(spec).prices
    rep = insensitivity_check(spec, prices, Deterministic(rate=2.0), budget=1_000_000)
    gaps = np.abs(rep.base.occupancy_hist - rep.alt.occupancy_hist)
    z = float(np.max(gaps / rep.hist_gap_sigmas))
    ci_sum = rep.base.revenue_rate_ci_half + rep.alt.revenue_rate_ci_half
    print(
        f"criterion 10 (insensitivity): max bin gap {rep.max_hist_gap:.2e}, worst "
        f"z = {z:.2f} (tol 3); revenue gap {rep.revenue_gap:.4f} vs CI sum {ci_sum:.4f}"
    )
    assert z <= 3.0
    assert rep.revenue_gap <= ci_sum


def test_criterion_11_asymptotic_families():
    lambdas = [1e2, 1e3, 1e4, 1e5]
    mu = 2.0
    failures = []

    v = asymptotic_mu_tilde("poisson", mu, lambdas)
    rel = abs(v[-1] - mu) / mu
    print(f"criterion 11 (poisson family): last = {v[-1]:.6f} vs {mu} "
          f"(rel {rel:.2e}, tol 0.02)")
    if rel > 0.02:
        failures.append("poisson")

    v = asymptotic_mu_tilde("rare-long-gap", mu, lambdas)
    print(f"criterion 11 (rare-long-gap family): last = {v[-1]:.2e} vs 0 (tol 0.02 absolute)")
    if abs(v[-1]) > 0.02:
        failures.append("rare-long-gap")

    # the family's transform gives lambda (1 - phi(mu)) -> (1 + mu - e^{-mu})/2;
    # the tabulated limit (1 - e^{-mu})/2 omits the mu/2 term and is unreachable
    v = asymptotic_mu_tilde("rare-unit-gap", mu, lambdas)
    want = (1.0 - math.exp(-mu)) / 2.0
    rel = abs(v[-1] - want) / want
    status = "ok" if rel <= 0.02 else "MISS"
    print(f"criterion 11 (rare-unit-gap family): last = {v[-1]:.6f} vs {want:.6f} "
          f"(rel {rel:.2f}, tol 0.02) {status}; actual limit = "
          f"{(1.0 + mu - math.exp(-mu)) / 2.0:.6f}")
    if rel > 0.02:
        failures.append(f"rare-unit-gap off by {rel:.0%}")

    assert not failures, "; ".join(failures)


def test_criterion_12_erlang_b_oracle():
    def erlang_b(k, a):
        e = 1.0
        for j in range(1, k + 1):
            e = a * e / (j + a * e)
        return e

    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 51))
        rho = float(rng.uniform(0.01, 50.0))
        p = float(rng.uniform(0.0, 6.0))
        mu = float(rng.uniform(0.2, 4.0))
        got = blocking_prob(Exponential(rate=rho * mu), VAL, mu, k, p)
        worst = max(worst, abs(got - erlang_b(k, rho * math.exp(-p))))
    print(f"criterion 12 (Erlang-B oracle): worst |diff| = {worst:.2e} over 1000 pairs "
          f"(tol 1e-10)")
    assert worst <= 1e-10
