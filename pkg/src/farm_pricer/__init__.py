"""Revenue-optimal admission pricing for K-server loss systems.

Renewal arrivals, exponential services, random customer valuations; solvers
for the best state-dependent and best uniform admission prices, stationary
occupancy and revenue formulas, and a discrete-event simulator that checks
the analytics.
"""

from .arrival import (
    Deterministic,
    DepartureMatrix,
    Exponential,
    TwoPoint,
    UniformInterval,
    beta_seq,
    departure_matrix,
    lst,
)
from .cli import emit_figure_data
from .errors import (
    BracketCollapse,
    ConfigError,
    DegenerateTransform,
    MultipleRoots,
    NoConvergence,
    NoFiniteMaximizer,
    NonFiniteObjective,
    NoRootInBracket,
    OutOfRange,
    PricingError,
    QuadratureFailure,
    SingularChain,
    UnknownFigure,
)
from .mdp_general import GeneralSolveResult, g_chain_general, solve_general
from .mdp_poisson import (
    PoissonSolveResult,
    SweepRow,
    fixed_point,
    g_chain,
    infinite_server_limit,
    sweep,
    value_iteration_oracle,
)
from .model import SystemSpec, price_array, spec_from_config
from .simulator import InsensitivityReport, SimConfig, SimResult, insensitivity_check, simulate
from .stationary import OccupancyDist, occupancy_general, occupancy_poisson, revenue_rate
from .uniform_pricing import (
    UniformPricingResult,
    asymptotic_mu_tilde,
    blocking_prob,
    gap_bound,
    optimize_uniform,
    revenue_uniform,
)
from .valuation import (
    AuxEval,
    ExponentialValuation,
    ParetoValuation,
    TabulatedTail,
    UniformValuation,
    eval_m,
    m_inverse,
    tail,
)

__version__ = "0.1.0"

__all__ = [
    "AuxEval",
    "BracketCollapse",
    "ConfigError",
    "DegenerateTransform",
    "DepartureMatrix",
    "Deterministic",
    "Exponential",
    "ExponentialValuation",
    "GeneralSolveResult",
    "InsensitivityReport",
    "MultipleRoots",
    "NoConvergence",
    "NoFiniteMaximizer",
    "NonFiniteObjective",
    "NoRootInBracket",
    "OccupancyDist",
    "OutOfRange",
    "ParetoValuation",
    "PoissonSolveResult",
    "PricingError",
    "QuadratureFailure",
    "SimConfig",
    "SimResult",
    "SingularChain",
    "SweepRow",
    "SystemSpec",
    "TabulatedTail",
    "TwoPoint",
    "UniformInterval",
    "UniformPricingResult",
    "UniformValuation",
    "UnknownFigure",
    "asymptotic_mu_tilde",
    "beta_seq",
    "blocking_prob",
    "departure_matrix",
    "emit_figure_data",
    "eval_m",
    "fixed_point",
    "g_chain",
    "g_chain_general",
    "gap_bound",
    "infinite_server_limit",
    "insensitivity_check",
    "lst",
    "m_inverse",
    "occupancy_general",
    "occupancy_poisson",
    "optimize_uniform",
    "price_array",
    "revenue_rate",
    "revenue_uniform",
    "simulate",
    "solve_general",
    "spec_from_config",
    "sweep",
    "tail",
    "value_iteration_oracle",
]
