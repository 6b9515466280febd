"""Single-price (state-independent) admission pricing.

Under a uniform price p the admitted stream is a thinned renewal process and
the busy-server count is a generalized Erlang loss system, so the blocking
probability has the closed form

    pi_K(p) = 1 / sum_{j=0}^{K} C(K,j) Gbar(p)^{-j} beta_j,

with beta_j from the interarrival transform.  Revenue is
lambda p Gbar(p) (1 - pi_K(p)).  The module optimizes that over p, bounds
the gap to the best state-dependent policy, and exposes the heavy-traffic
throughput diagnostic lambda (1 - phi(mu)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from .arrival import (
    Exponential,
    InterarrivalDist,
    _log_beta_seq,
    lst,
    rare_long_gap_family,
    rare_unit_gap_family,
)
from .errors import NoFiniteMaximizer
from .valuation import ValuationDist, _golden_max, eval_m, tail


@dataclass(frozen=True)
class UniformPricingResult:
    """Best single price for K servers, and the infinite-server benchmark.

    gap_upper is an upper bound on the revenue of the best state-dependent
    policy: revenue_K / (1 - pi_K(p_star_inf)).
    """

    p_star_K: float
    revenue_K: float
    p_star_inf: float
    revenue_inf_bound: float
    gap_upper: float


def blocking_prob(
    dist: InterarrivalDist, val: ValuationDist, mu: float, k: int, p: float
) -> float:
    """Long-run fraction of admitted-willing arrivals that find all servers busy."""
    gbar = float(tail(val, p))
    if gbar <= 0.0:
        # nobody joins, the system drains and is never full
        return 0.0
    logb = _log_beta_seq(dist, mu, k)
    j = np.arange(k + 1)
    logc = gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
    return float(np.exp(-logsumexp(logc - j * math.log(gbar) + logb)))


def revenue_uniform(
    dist: InterarrivalDist, val: ValuationDist, mu: float, k: int, p: float
) -> float:
    """Mean revenue rate lambda * p * Gbar(p) * (1 - pi_K(p)) at uniform price p."""
    if p < 0:
        raise ValueError(f"price must be >= 0, got {p}")
    gbar = float(tail(val, p))
    if gbar <= 0.0:
        return 0.0
    lam = 1.0 / dist.mean
    return lam * p * gbar * (1.0 - blocking_prob(dist, val, mu, k, p))


def optimize_uniform(
    dist: InterarrivalDist, val: ValuationDist, mu: float, k: int
) -> UniformPricingResult:
    """Maximize the uniform-price revenue over p.

    512-point log grid on (0, Q(1e-9)] followed by golden-section
    refinement; the revenue curve is not provably unimodal, so the grid
    does the global work and the section search only polishes.
    """
    inf_eval = eval_m(val, 0.0)
    p_inf = inf_eval.u_star
    lam = 1.0 / dist.mean
    rev_inf = lam * inf_eval.m_val

    q_hi = val.tail_quantile(1e-9)
    cap_at_hi = q_hi * float(tail(val, q_hi))
    if inf_eval.m_val > 0.0 and cap_at_hi >= (1.0 - 1e-6) * inf_eval.m_val:
        # p Gbar(p) never leaves its supremum, so raising p only sheds
        # blocking and the revenue sup is approached, never attained
        raise NoFiniteMaximizer(
            f"p * Gbar(p) = {cap_at_hi:.6g} at the {1e-9:g} tail quantile "
            f"p = {q_hi:.6g} is still at the supremum {inf_eval.m_val:.6g}; "
            f"no finite optimal price exists"
        )
    grid = np.geomspace(max(q_hi * 1e-9, 1e-300), q_hi, 512)
    rev = np.array([revenue_uniform(dist, val, mu, k, p) for p in grid])
    i = int(np.argmax(rev))
    if i == len(grid) - 1 and rev[-1] > rev[-2] and tail(val, grid[-1]) > 0:
        raise NoFiniteMaximizer(
            f"revenue still rising at p = {grid[-1]:.6g} (value {rev[-1]:.6g}); "
            f"no finite optimal price detected"
        )

    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    p_star = _golden_max(lambda p: revenue_uniform(dist, val, mu, k, p), lo, hi, 1e-8)
    r_star = revenue_uniform(dist, val, mu, k, p_star)
    if rev[i] > r_star:
        p_star, r_star = float(grid[i]), float(rev[i])

    gap_upper = r_star / (1.0 - blocking_prob(dist, val, mu, k, p_inf))
    return UniformPricingResult(
        p_star_K=p_star,
        revenue_K=r_star,
        p_star_inf=p_inf,
        revenue_inf_bound=rev_inf,
        gap_upper=gap_upper,
    )


def gap_bound(
    dist: InterarrivalDist, val: ValuationDist, mu: float, k: int
) -> tuple[float, float, float]:
    """Sandwich the optimal state-dependent revenue R*.

    Returns (lower, upper, coarse_gap): the best uniform revenue is a lower
    bound, lower / (1 - pi_K(p_inf)) an upper bound, and coarse_gap the
    weaker transform-only bound lower / (beta_1 K) on R* - lower, which
    never needs a price search to state.
    """
    res = optimize_uniform(dist, val, mu, k)
    beta1 = float(np.exp(_log_beta_seq(dist, mu, 1)[1]))
    coarse_gap = res.revenue_K / (beta1 * k)
    return res.revenue_K, res.gap_upper, coarse_gap


_FAMILIES: dict[str, Callable[[float], InterarrivalDist]] = {
    "poisson": lambda rate: Exponential(rate=rate),
    "rare-long-gap": rare_long_gap_family,
    "rare-unit-gap": rare_unit_gap_family,
}


def asymptotic_mu_tilde(
    family: Union[str, Callable[[float], InterarrivalDist]],
    mu: float,
    lambdas: Sequence[float],
) -> np.ndarray:
    """Evaluate the throughput-potential diagnostic lambda (1 - phi(mu)).

    `family` maps an arrival rate to an interarrival law (or names a
    built-in: poisson, rare-long-gap, rare-unit-gap).  Along an increasing
    rate grid the values trend toward the limiting effective service rate
    that caps uniform-price revenue at mu_tilde * p * K.
    """
    if isinstance(family, str):
        key = family.replace("_", "-").lower()
        if key not in _FAMILIES:
            raise ValueError(f"unknown family '{family}'; choose from {sorted(_FAMILIES)}")
        maker = _FAMILIES[key]
    else:
        maker = family
    lams = np.asarray(lambdas, dtype=float)
    if lams.ndim != 1 or len(lams) == 0 or np.any(np.diff(lams) <= 0):
        raise ValueError("lambdas must be a nonempty strictly increasing grid")
    return np.array([lam * (1.0 - lst(maker(lam), mu)) for lam in lams])
