"""Renewal interval laws and the departure statistics they induce.

The same classes describe interarrival times (rate lambda) and, in the
simulator, service times (rate mu): each is a positive random interval with
a prescribed mean.  Analytical work needs the Laplace-Stieltjes transform
phi(s) = E exp(-s U); the blocking formula needs the products

    beta_j = prod_{m=1}^{j} (1 - phi(m mu)) / phi(m mu),

and the arrival-sampled Markov chain needs the departure-count law

    alpha_{k,i} = E[ C(k,i) (1 - e^{-mu U})^i e^{-(k-i) mu U} ],

the probability that exactly i of k busy exponential servers finish within
one interval.  Cumulative sums a_{i,j} = sum_{l<=j} alpha_{i,i-l} (chance
that at most j of i jobs survive) satisfy three structural identities that
are checked on every constructed matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import betaln, gammaln

from .errors import ConfigError, DegenerateTransform, QuadratureFailure


@dataclass(frozen=True)
class Exponential:
    """Exponential interval; a renewal stream of these is a Poisson process."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def lst(self, s: float) -> float:
        return self.rate / (self.rate + s)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, n)


@dataclass(frozen=True)
class Deterministic:
    """Point mass at 1/rate (perfectly regular intervals)."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def lst(self, s: float) -> float:
        return math.exp(-s / self.rate)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, 1.0 / self.rate)


@dataclass(frozen=True)
class UniformInterval:
    """Interval uniform on [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi and math.isfinite(self.hi)):
            raise ValueError(f"need 0 <= lo < hi < inf, got [{self.lo}, {self.hi}]")

    @classmethod
    def from_rate(cls, rate: float) -> "UniformInterval":
        """Symmetric-about-the-mean convention: U[0, 2/rate]."""
        return cls(0.0, 2.0 / rate)

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def rate(self) -> float:
        return 1.0 / self.mean

    def lst(self, s: float) -> float:
        if s == 0.0:
            return 1.0
        w = s * (self.hi - self.lo)
        # exp(-s lo) - exp(-s hi) via expm1, stable for small s
        return -math.exp(-s * self.lo) * math.expm1(-w) / w

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, n)


@dataclass(frozen=True)
class TwoPoint:
    """Two-atom interval: x1 with probability p1, else x2."""

    x1: float
    p1: float
    x2: float

    def __post_init__(self):
        if not (self.x1 > 0 and self.x2 > 0):
            raise ValueError("atoms must be positive")
        if not (0.0 < self.p1 < 1.0):
            raise ValueError(f"p1 must lie in (0, 1), got {self.p1}")

    @property
    def mean(self) -> float:
        return self.p1 * self.x1 + (1.0 - self.p1) * self.x2

    @property
    def rate(self) -> float:
        return 1.0 / self.mean

    def lst(self, s: float) -> float:
        return self.p1 * math.exp(-s * self.x1) + (1.0 - self.p1) * math.exp(-s * self.x2)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.where(rng.random(n) < self.p1, self.x1, self.x2)


InterarrivalDist = Union[Exponential, Deterministic, UniformInterval, TwoPoint]


def lst(dist: InterarrivalDist, s: float) -> float:
    """E[exp(-s U)], with a defensive range check."""
    if s < 0:
        raise ValueError(f"transform argument must be >= 0, got {s}")
    value = dist.lst(s)
    if not (0.0 < value <= 1.0):
        raise DegenerateTransform(f"phi({s}) = {value} outside (0, 1]")
    return value


def _log_beta_seq(dist: InterarrivalDist, mu: float, k: int) -> np.ndarray:
    out = np.empty(k + 1)
    out[0] = 0.0
    acc = 0.0
    for j in range(1, k + 1):
        ph = dist.lst(j * mu)
        if not (0.0 < ph < 1.0):
            raise DegenerateTransform(
                f"phi({j * mu}) = {ph}; beta products need phi strictly inside (0, 1)"
            )
        acc += math.log1p(-ph) - math.log(ph)
        out[j] = acc
    return out


def beta_seq(dist: InterarrivalDist, mu: float, k: int) -> np.ndarray:
    """(beta_0, ..., beta_k) with beta_j = prod_{m<=j} (1 - phi(m mu)) / phi(m mu).

    Accumulated in log space so long products neither underflow nor lose
    relative precision.
    """
    if not (mu > 0 and k >= 1):
        raise ValueError(f"need mu > 0 and k >= 1, got mu={mu}, k={k}")
    return np.exp(_log_beta_seq(dist, mu, k))


@dataclass(frozen=True)
class DepartureMatrix:
    """Departure-count probabilities alpha and their cumulative sums a_cum.

    alpha[k, i] is the chance that i of k busy servers finish within one
    interarrival period; a_cum[i, j] the chance that at most j of i jobs
    survive it.  Both are (K+1) x (K+1), lower-triangular in the sense that
    entries with column index above the row index are unused (alpha) or
    saturated at 1 (a_cum).
    """

    k: int
    mu: float
    alpha: np.ndarray
    a_cum: np.ndarray


def _binomial_thinning_row(k: int, mu: float, x: float) -> np.ndarray:
    """alpha row for a fixed interval length x: Binomial(k, 1 - e^{-mu x})."""
    q = math.exp(-mu * x)
    i = np.arange(k + 1)
    logc = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
    with np.errstate(divide="ignore"):
        logp = np.where(i > 0, i * np.log1p(-q), 0.0)
        logq = np.where(k - i > 0, -(k - i) * mu * x, 0.0)
    return np.exp(logc + logp + logq)


def _alpha_exponential(lam: float, mu: float, k_max: int) -> np.ndarray:
    # E over Exp(lam) has a Beta-function closed form:
    # alpha_{k,i} = C(k,i) * (lam/mu) * B(lam/mu + k - i, i + 1)
    r = lam / mu
    alpha = np.zeros((k_max + 1, k_max + 1))
    alpha[0, 0] = 1.0
    for k in range(1, k_max + 1):
        i = np.arange(k + 1)
        logc = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
        alpha[k, : k + 1] = np.exp(logc + math.log(r) + betaln(r + k - i, i + 1))
    return alpha


def _alpha_quadrature(dist, mu: float, k_max: int, quad_tol: float) -> np.ndarray:
    if isinstance(dist, UniformInterval):
        lo, hi, density = dist.lo, dist.hi, 1.0 / (dist.hi - dist.lo)
    else:
        raise QuadratureFailure(f"no integration recipe for {type(dist).__name__}")
    alpha = np.zeros((k_max + 1, k_max + 1))
    alpha[0, 0] = 1.0
    for k in range(1, k_max + 1):
        for i in range(k + 1):
            logc = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
            c = math.exp(logc)

            def integrand(x, i=i, k=k, c=c):
                return c * density * (1.0 - math.exp(-mu * x)) ** i * math.exp(-(k - i) * mu * x)

            val, err = quad(integrand, lo, hi, epsabs=0.1 * quad_tol, epsrel=0.1 * quad_tol, limit=200)
            if err > quad_tol:
                raise QuadratureFailure(
                    f"alpha[{k},{i}] error estimate {err:.2e} exceeds {quad_tol:.2e}"
                )
            alpha[k, i] = val
    return alpha


def departure_matrix(
    dist: InterarrivalDist, mu: float, k: int, quad_tol: float = 1e-10
) -> DepartureMatrix:
    """Build and validate the departure-count matrix for k servers.

    Closed forms for exponential, deterministic and two-point intervals;
    adaptive quadrature otherwise.  Raises QuadratureFailure when rows do
    not sum to one or the structural identities fail beyond tolerance.
    """
    if not (k >= 1 and mu > 0):
        raise ValueError(f"need k >= 1 and mu > 0, got k={k}, mu={mu}")
    if isinstance(dist, Exponential):
        alpha = _alpha_exponential(dist.rate, mu, k)
    elif isinstance(dist, Deterministic):
        alpha = np.zeros((k + 1, k + 1))
        for kk in range(k + 1):
            alpha[kk, : kk + 1] = _binomial_thinning_row(kk, mu, dist.mean)
    elif isinstance(dist, TwoPoint):
        alpha = np.zeros((k + 1, k + 1))
        for kk in range(k + 1):
            alpha[kk, : kk + 1] = dist.p1 * _binomial_thinning_row(kk, mu, dist.x1) + (
                1.0 - dist.p1
            ) * _binomial_thinning_row(kk, mu, dist.x2)
    else:
        alpha = _alpha_quadrature(dist, mu, k, quad_tol)

    rows = alpha.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-9:
        raise QuadratureFailure(f"alpha rows sum to {rows}, expected 1")

    # a_cum[i, j] = sum_{l<=j} alpha[i, i-l]
    a_cum = np.zeros_like(alpha)
    for i in range(k + 1):
        a_cum[i, : i + 1] = np.cumsum(alpha[i, : i + 1][::-1])

    _check_survivor_identities(alpha, a_cum, k)
    return DepartureMatrix(k=k, mu=mu, alpha=alpha, a_cum=a_cum)


def _check_survivor_identities(alpha: np.ndarray, a_cum: np.ndarray, k: int) -> None:
    # (a) one more initial job cannot raise the chance of few survivors
    for i in range(1, k):
        bad = a_cum[i + 1, :i] > a_cum[i, :i] + 1e-9
        if np.any(bad):
            raise QuadratureFailure(f"a[{i + 1}, j] > a[{i}, j] at j = {np.nonzero(bad)[0]}")
    # (b) "some departure" and "no departure" partition the period
    for i in range(1, k + 1):
        gap = abs(a_cum[i, i - 1] + alpha[i, 0] - 1.0)
        if gap > 1e-9:
            raise QuadratureFailure(f"a[{i},{i - 1}] + alpha[{i},0] - 1 = {gap:.2e}")
    # (c) telescoping of cumulative mass equals the single-server departure chance
    for i in range(k):
        gap = abs(a_cum[i + 1, : i + 1].sum() - a_cum[i, :i].sum() - alpha[1, 1])
        if gap > 1e-9:
            raise QuadratureFailure(f"cumulative telescoping off by {gap:.2e} at i = {i}")


def arrival_from_config(cfg: dict) -> InterarrivalDist:
    """Build an interval law from its JSON description."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("arrival", "expected an object with a 'kind' field")
    kind = cfg["kind"]
    try:
        if kind in ("exponential", "exp", "poisson"):
            return Exponential(rate=float(cfg["rate"]))
        if kind in ("deterministic", "constant"):
            return Deterministic(rate=float(cfg["rate"]))
        if kind == "uniform":
            if "lo" in cfg or "hi" in cfg:
                return UniformInterval(lo=float(cfg["lo"]), hi=float(cfg["hi"]))
            return UniformInterval.from_rate(float(cfg["rate"]))
        if kind == "two_point":
            return TwoPoint(x1=float(cfg["x1"]), p1=float(cfg["p1"]), x2=float(cfg["x2"]))
    except KeyError as exc:
        raise ConfigError(f"arrival.{exc.args[0]}", "missing parameter") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("arrival", str(exc)) from None
    raise ConfigError("arrival.kind", f"unknown arrival kind '{kind}'")


def rare_long_gap_family(rate: float) -> TwoPoint:
    """Two-point interarrival law whose throughput potential collapses.

    Atoms sqrt(m) (probability 1/m) and 1/m, with m chosen so the mean is
    1/rate.  As the rate grows the rare long gap grows too, and
    rate * (1 - phi(mu)) tends to zero.
    """
    if rate <= 1.0:
        raise ValueError(f"family defined for rate > 1, got {rate}")

    def mean_gap(m):
        return 1.0 / math.sqrt(m) + (1.0 / m) * (1.0 - 1.0 / m) - 1.0 / rate

    m = brentq(mean_gap, 1.0 + 1e-9, max(1e18, 16.0 * rate**2))
    return TwoPoint(x1=math.sqrt(m), p1=1.0 / m, x2=1.0 / m)


def rare_unit_gap_family(rate: float) -> TwoPoint:
    """Two-point interarrival law with a rare fixed gap of length one.

    Atoms 1 (probability 1/m) and 1/m, with m = rate + sqrt(rate^2 - rate)
    so the mean is exactly 1/rate.  rate * (1 - phi(mu)) approaches a limit
    strictly between 0 and mu.
    """
    if rate <= 1.0:
        raise ValueError(f"family defined for rate > 1, got {rate}")
    m = rate + math.sqrt(rate * rate - rate)
    return TwoPoint(x1=1.0, p1=1.0 / m, x2=1.0 / m)
