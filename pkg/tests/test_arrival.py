"""Interval laws: transforms, beta products, departure-count matrices."""

import math

import numpy as np
import pytest

from farm_pricer import (
    Deterministic,
    Exponential,
    TwoPoint,
    UniformInterval,
    beta_seq,
    departure_matrix,
    lst,
)
from farm_pricer.arrival import (
    arrival_from_config,
    rare_long_gap_family,
    rare_unit_gap_family,
)
from farm_pricer.errors import ConfigError

ALL_DISTS = [
    Exponential(rate=25.0),
    Deterministic(rate=25.0),
    UniformInterval.from_rate(25.0),
    TwoPoint(x1=0.1, p1=0.3, x2=0.02),
]


# ---------------------------------------------------------------- transforms

def test_lst_values():
    assert lst(Exponential(rate=25.0), 2.0) == pytest.approx(25.0 / 27.0)
    assert lst(Deterministic(rate=25.0), 2.0) == pytest.approx(math.exp(-0.08))
    for d in ALL_DISTS:
        assert lst(d, 0.0) == 1.0


def test_lst_uniform_explicit():
    d = UniformInterval(0.0, 2.0)
    s = 3.0
    # (1 - e^{-s hi}) / (s hi) for lo = 0
    assert lst(d, s) == pytest.approx((1 - math.exp(-6.0)) / 6.0)
    # small-s stability: phi(s) ~ 1 - s/lambda
    assert lst(d, 1e-12) == pytest.approx(1.0 - 1e-12, abs=1e-15)


def test_lst_bounds_and_monotone():
    s_grid = np.linspace(0.0, 50.0, 200)
    for d in ALL_DISTS:
        lam = 1.0 / d.mean
        vals = np.array([lst(d, s) for s in s_grid])
        assert np.all(np.diff(vals) <= 1e-12)
        # Jensen: e^{-s E[U]} <= phi(s) <= 1
        assert np.all(vals <= 1.0 + 1e-12)
        assert np.all(vals >= np.exp(-s_grid / lam) - 1e-12)


def test_mean_normalization():
    for d in ALL_DISTS[:3]:
        assert d.mean == pytest.approx(1.0 / 25.0)


# ---------------------------------------------------------------- beta products

def test_beta_seq_poisson_closed_form():
    # beta_j = j! (mu/lambda)^j when phi(s) = lambda/(lambda+s)
    lam, mu = 25.0, 2.0
    b = beta_seq(Exponential(rate=lam), mu, 4)
    for j in range(5):
        assert b[j] == pytest.approx(math.factorial(j) * (mu / lam) ** j, rel=1e-12)
    assert b[2] == pytest.approx(0.0128)


def test_beta_seq_two_point_direct():
    m = 100.0
    d = TwoPoint(x1=math.sqrt(m), p1=1 / m, x2=1 / m)
    phi1 = 0.99 * math.exp(-0.01) + 0.01 * math.exp(-10.0)
    b = beta_seq(d, 1.0, 1)
    assert b[0] == 1.0
    assert b[1] == pytest.approx((1 - phi1) / phi1, rel=1e-12)


def test_beta_seq_validates():
    with pytest.raises(ValueError):
        beta_seq(Exponential(rate=1.0), -1.0, 3)
    with pytest.raises(ValueError):
        beta_seq(Exponential(rate=1.0), 1.0, 0)


# ---------------------------------------------------------------- departures

def test_departure_matrix_deterministic_half_life():
    # mu d = ln 2: each busy server flips a fair coin per interval
    mu = math.log(2.0)
    dep = departure_matrix(Deterministic(rate=1.0), mu, 2)
    assert dep.alpha[2, 1] == pytest.approx(0.5)
    assert dep.alpha[2, 0] == pytest.approx(0.25)
    assert dep.alpha[2, 2] == pytest.approx(0.25)


def test_departure_matrix_exponential_k1():
    # alpha_{1,1} = mu/(lambda+mu)
    dep = departure_matrix(Exponential(rate=25.0), 2.0, 1)
    assert dep.alpha[1, 1] == pytest.approx(2.0 / 27.0, rel=1e-12)
    assert dep.alpha[0, 0] == 1.0


def test_departure_matrix_rows_and_identities():
    for d in ALL_DISTS:
        dep = departure_matrix(d, 2.0, 6)
        for k in range(7):
            assert dep.alpha[k, : k + 1].sum() == pytest.approx(1.0, abs=1e-9)
            # a_cum is a CDF over survivor counts
            assert dep.a_cum[k, k] == pytest.approx(1.0, abs=1e-9)
        for i in range(1, 7):
            assert dep.a_cum[i, i - 1] + dep.alpha[i, 0] == pytest.approx(1.0, abs=1e-9)
        for i in range(1, 6):
            assert np.all(dep.a_cum[i + 1, :i] <= dep.a_cum[i, :i] + 1e-9)
        for i in range(6):
            lhs = dep.a_cum[i + 1, : i + 1].sum() - dep.a_cum[i, :i].sum()
            assert lhs == pytest.approx(dep.alpha[1, 1], abs=1e-9)


def test_uniform_quadrature_matches_monte_carlo():
    dep = departure_matrix(UniformInterval.from_rate(5.0), 2.0, 3)
    rng = np.random.default_rng(0)
    x = rng.uniform(0.0, 0.4, 400_000)
    for i in range(4):
        mc = np.mean(
            math.comb(3, i) * (1 - np.exp(-2 * x)) ** i * np.exp(-2 * x) ** (3 - i)
        )
        assert dep.alpha[3, i] == pytest.approx(mc, abs=2e-3)


def test_exponential_closed_form_vs_binomial_mixture():
    # TwoPoint degenerating to a single atom must equal the Deterministic matrix
    a1 = departure_matrix(TwoPoint(x1=0.04, p1=0.5, x2=0.04), 2.0, 4).alpha
    a2 = departure_matrix(Deterministic(rate=25.0), 2.0, 4).alpha
    np.testing.assert_allclose(a1, a2, atol=1e-12)


# ---------------------------------------------------------------- families

def test_rare_long_gap_family_mean_and_trend():
    for lam in (10.0, 100.0, 1000.0):
        d = rare_long_gap_family(lam)
        assert d.mean == pytest.approx(1.0 / lam, rel=1e-9)
    v = [lam * (1 - lst(rare_long_gap_family(lam), 2.0)) for lam in (1e2, 1e3, 1e4)]
    assert v[0] > v[1] > v[2]  # throughput potential collapses


def test_rare_unit_gap_family_mean():
    for lam in (10.0, 100.0):
        d = rare_unit_gap_family(lam)
        assert d.mean == pytest.approx(1.0 / lam, rel=1e-12)
        assert d.x1 == 1.0


# ---------------------------------------------------------------- config

def test_arrival_from_config():
    assert isinstance(arrival_from_config({"kind": "exponential", "rate": 2.0}), Exponential)
    assert isinstance(arrival_from_config({"kind": "deterministic", "rate": 2.0}), Deterministic)
    u = arrival_from_config({"kind": "uniform", "rate": 2.0})
    assert isinstance(u, UniformInterval) and u.hi == pytest.approx(1.0)
    u2 = arrival_from_config({"kind": "uniform", "lo": 0.1, "hi": 0.3})
    assert u2.lo == 0.1
    tp = arrival_from_config({"kind": "two_point", "x1": 1.0, "p1": 0.25, "x2": 0.5})
    assert isinstance(tp, TwoPoint)
    with pytest.raises(ConfigError):
        arrival_from_config({"kind": "weibull", "rate": 1.0})
    with pytest.raises(ConfigError):
        arrival_from_config({"kind": "exponential"})
    with pytest.raises(ConfigError):
        arrival_from_config({"kind": "exponential", "rate": -3.0})
