"""Exception types shared across the library.

Every failure a caller can reasonably branch on gets its own class; all of
them derive from PricingError so the CLI can map "our" errors to exit code 3
(solver failure) while configuration problems map to exit code 2.
"""


class PricingError(Exception):
    """Base class for all library-specific failures."""


class ConfigError(PricingError):
    """Invalid or missing configuration value.

    Carries the offending key so the CLI can point at it.
    """

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class NonFiniteObjective(PricingError):
    """(u - B) * tail(u) keeps improving as u grows; no finite maximizer exists."""


class OutOfRange(PricingError):
    """Requested value lies outside the invertible range of a monotone map."""


class DegenerateTransform(PricingError):
    """Interarrival transform returned an unusable value (phi(s) outside (0, 1))."""


class QuadratureFailure(PricingError):
    """Numeric integration missed its tolerance or produced inconsistent rows."""


class NoFiniteMaximizer(PricingError):
    """Revenue still climbing at the search boundary; no interior optimum found."""


class BracketCollapse(PricingError):
    """Bisection bracket inverted, which signals a non-monotone map evaluation."""


class NoConvergence(PricingError):
    """Iterative scheme exhausted its sweep budget before reaching tolerance."""


class NoRootInBracket(PricingError):
    """Root scan found no sign change over the admissible revenue range."""


class SingularChain(PricingError):
    """Stationary equations are singular; chain reducible or ill-conditioned."""


class UnknownFigure(PricingError):
    """Figure identifier does not match any known dataset."""


class MultipleRoots(UserWarning):
    """Root scan located several candidates; the smallest was returned."""
