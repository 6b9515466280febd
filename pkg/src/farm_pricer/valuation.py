"""Customer valuation laws and the surplus map they induce.

A customer facing price u buys iff their sampled valuation is at least u,
which happens with probability ``tail(u)``.  Solvers interact with a law
through three primitives only:

* the tail itself,
* ``eval_m``: the maximum of f(B, u) = (u - B) * tail(u) over prices u,
  together with its smallest maximizer u*(B), and
* ``m_inverse``: the inverse of B -> m(B) on its decreasing range.

m is nonnegative, nonincreasing, convex and Lipschitz-1 in B, and u*(B) is
nondecreasing; the solvers lean on all four properties, so the test suite
checks them on random pairs for every supported law.

Since valuations are positive, tail(u) = 1 for u <= 0 and the maximization
is effectively over u >= 0: for very negative B the maximizer clamps to 0
and m(B) = -B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, NonFiniteObjective, OutOfRange

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # golden ratio section


def _as_float_or_array(u):
    arr = np.asarray(u, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class ExponentialValuation:
    """Exponential valuation with tail e^{-beta u}; mean 1/beta."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")

    @property
    def mean_value(self) -> float:
        return 1.0 / self.beta

    def tail(self, u):
        arr, scalar = _as_float_or_array(u)
        out = np.exp(-self.beta * np.maximum(arr, 0.0))
        return float(out) if scalar else out

    def tail_quantile(self, eps: float) -> float:
        """Price above which fewer than a fraction eps of customers buy."""
        return -math.log(eps) / self.beta

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.beta, n)


@dataclass(frozen=True)
class ParetoValuation:
    """Pareto valuation with tail min(1, theta/u).

    u * tail(u) tends to the constant theta, so revenue per admission never
    falls off: there is no finite revenue-maximizing price whenever the
    opportunity cost B is positive, and the mean valuation is infinite.
    Useful for the scaled-price growth diagnostics, not for the MDP solvers.
    """

    theta: float

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be positive and finite, got {self.theta}")

    @property
    def mean_value(self) -> float:
        return math.inf

    def tail(self, u):
        arr, scalar = _as_float_or_array(u)
        out = np.minimum(1.0, self.theta / np.maximum(arr, self.theta))
        return float(out) if scalar else out

    def tail_quantile(self, eps: float) -> float:
        return self.theta / eps

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # inverse transform: P{theta/U >= x} = theta/x for U uniform on (0,1]
        return self.theta / (1.0 - rng.random(n))


@dataclass(frozen=True)
class UniformValuation:
    """Valuation uniform on [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi and math.isfinite(self.hi)):
            raise ValueError(f"need 0 <= lo < hi < inf, got [{self.lo}, {self.hi}]")

    @property
    def mean_value(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def tail(self, u):
        arr, scalar = _as_float_or_array(u)
        out = np.clip((self.hi - arr) / (self.hi - self.lo), 0.0, 1.0)
        return float(out) if scalar else out

    def tail_quantile(self, eps: float) -> float:
        return self.hi - eps * (self.hi - self.lo)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, n)


@dataclass(frozen=True)
class TabulatedTail:
    """Piecewise-linear tail through knots (x_j, g_j); zero beyond the last knot.

    The table must start at (0, 1) and be nonincreasing.  A positive final
    g value is allowed and represents an atom at the last knot.
    """

    xs: tuple
    gs: tuple

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        gs = tuple(float(g) for g in self.gs)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "gs", gs)
        if len(xs) != len(gs) or len(xs) < 2:
            raise ValueError("need >= 2 knots with matching lengths")
        if xs[0] != 0.0 or gs[0] != 1.0:
            raise ValueError("table must start at (0, 1)")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("x knots must be strictly increasing")
        if any(b > a for a, b in zip(gs, gs[1:])) or gs[-1] < 0.0:
            raise ValueError("tail values must be nonincreasing and nonnegative")

    @property
    def mean_value(self) -> float:
        x = np.asarray(self.xs)
        g = np.asarray(self.gs)
        return float(np.sum(np.diff(x) * 0.5 * (g[:-1] + g[1:])))

    def tail(self, u):
        arr, scalar = _as_float_or_array(u)
        out = np.interp(arr, self.xs, self.gs, left=1.0, right=0.0)
        return float(out) if scalar else out

    def tail_quantile(self, eps: float) -> float:
        if eps < self.gs[-1]:
            return self.xs[-1]
        return float(np.interp(eps, self.gs[::-1], self.xs[::-1]))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        w = rng.random(n)
        return np.interp(w, self.gs[::-1], self.xs[::-1])


ValuationDist = Union[ExponentialValuation, ParetoValuation, UniformValuation, TabulatedTail]


def tail(dist: ValuationDist, u):
    """Acceptance probability at price u."""
    return dist.tail(u)


@dataclass(frozen=True)
class AuxEval:
    """Result of maximizing f(B, u) = (u - B) * tail(u) over u."""

    B: float
    u_star: float
    m_val: float


def _golden_max(fn, a: float, b: float, tol: float) -> float:
    """Golden-section maximum of fn on [a, b]; ties resolve leftward."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(200):
        if b - a <= tol:
            break
        if fc >= fd:  # >= keeps plateau walks moving toward smaller u
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _eval_m_numeric(dist: ValuationDist, B: float) -> AuxEval:
    lo = max(B, 0.0)
    # widen past the literal B + quantile so negative B still covers the
    # whole region where the tail is positive
    hi = max(B, 0.0) + dist.tail_quantile(1e-9)
    if hi <= lo:
        return AuxEval(B, lo, (lo - B) * dist.tail(lo))
    grid = np.linspace(lo, hi, 256)
    fg = (grid - B) * dist.tail(grid)
    i = int(np.argmax(fg))  # argmax returns the first hit: smallest maximizer
    if i == len(grid) - 1 and fg[-1] > fg[-2] and dist.tail(hi) > 0.0:
        raise NonFiniteObjective(
            f"(u - {B}) * tail(u) still increasing at u = {hi:.6g}"
        )
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    fn = lambda u: (u - B) * dist.tail(u)
    u = _golden_max(fn, a, b, tol=1e-10 * max(1.0, abs(b)))
    # never come back worse than the best grid point
    if fn(u) < fg[i]:
        u = float(grid[i])
    return AuxEval(B, u, fn(u))


def eval_m(dist: ValuationDist, B: float) -> AuxEval:
    """Maximize (u - B) * tail(u); smallest maximizer wins ties.

    Closed forms for the exponential and Pareto kinds, a 256-point coarse
    grid plus golden-section refinement otherwise (f need not be unimodal
    for an arbitrary tail, so the grid locates the bracket first).
    """
    if not math.isfinite(B):
        raise ValueError(f"B must be finite, got {B}")
    if isinstance(dist, ExponentialValuation):
        u = max(B + 1.0 / dist.beta, 0.0)
        return AuxEval(B, u, (u - B) * math.exp(-dist.beta * u))
    if isinstance(dist, ParetoValuation):
        if B > 0.0:
            raise NonFiniteObjective(
                "Pareto tail: (u - B) * tail(u) increases toward theta for B > 0"
            )
        return AuxEval(B, dist.theta, dist.theta - B)
    return _eval_m_numeric(dist, B)


def m_inverse(dist: ValuationDist, y: float, tol_m: float = 1e-10) -> float:
    """Solve m(B) = y for B, using that m is decreasing.

    Returns B with |m(B) - y| <= tol_m.  Raises OutOfRange when y is not in
    the reachable range (e.g. y <= 0, or y below an unreachable plateau).
    """
    if not (y > 0.0 and math.isfinite(y)):
        raise OutOfRange(f"m maps onto positive values only, got y = {y}")
    if isinstance(dist, ExponentialValuation):
        if y > 1.0 / dist.beta:
            return -y  # clamped branch: m(B) = -B for B <= -1/beta
        return (-math.log(dist.beta * y) - 1.0) / dist.beta
    if isinstance(dist, ParetoValuation):
        if y < dist.theta:
            raise OutOfRange(
                f"Pareto m only takes values >= theta = {dist.theta}, got {y}"
            )
        return dist.theta - y

    lo = 0.0
    m_lo = eval_m(dist, lo).m_val
    if m_lo < y:
        lo = -y  # m(-y) >= (0 - (-y)) * tail(0) = y
        m_lo = eval_m(dist, lo).m_val
    hi = max(2.0 * abs(lo), 1.0)
    for _ in range(200):
        if eval_m(dist, hi).m_val <= y:
            break
        hi *= 2.0
    else:
        raise OutOfRange(f"could not bracket m(B) = {y} from above")
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = eval_m(dist, mid).m_val
        if abs(val - y) <= tol_m:
            return mid
        if val > y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    val = eval_m(dist, mid).m_val
    if abs(val - y) <= 10.0 * tol_m:
        return mid
    raise OutOfRange(
        f"m is not invertible at y = {y} (bracket collapsed with residual {val - y:.3g})"
    )


def valuation_from_config(cfg: dict) -> ValuationDist:
    """Build a valuation law from its JSON description."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("valuation", "expected an object with a 'kind' field")
    kind = cfg["kind"]
    try:
        if kind in ("exponential", "exp"):
            return ExponentialValuation(beta=float(cfg["beta"]))
        if kind == "pareto":
            return ParetoValuation(theta=float(cfg["theta"]))
        if kind == "uniform":
            return UniformValuation(lo=float(cfg["lo"]), hi=float(cfg["hi"]))
        if kind in ("tabulated", "table"):
            return TabulatedTail(xs=tuple(cfg["xs"]), gs=tuple(cfg["gs"]))
    except KeyError as exc:
        raise ConfigError(f"valuation.{exc.args[0]}", "missing parameter") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("valuation", str(exc)) from None
    raise ConfigError("valuation.kind", f"unknown valuation kind '{kind}'")
