"""Exception hierarchy shared across the library.

Every error raised on a contract violation derives from ErgPhaseError so
callers (and the CLI) can distinguish library failures from bugs.
"""


class ErgPhaseError(Exception):
    """Base class for all library errors."""


class DegenerateDistribution(ErgPhaseError, ValueError):
    """Edge-weight distribution has zero variance (or invalid parameters)."""


class OverflowGuard(ErgPhaseError, ValueError):
    """Tilt parameter outside the evaluable range (|theta| > guard)."""


class BracketFailure(ErgPhaseError, RuntimeError):
    """Root bracketing walked past the evaluable range without a sign change."""


class RangeExhausted(ErgPhaseError, RuntimeError):
    """Stationarity scan found no sign change on the guarded range."""


class AssumptionViolated(ErgPhaseError, RuntimeError):
    """The curvature-balance function does not have exactly one zero.

    Carries the observed zero count so callers can report it.
    """

    def __init__(self, count, message=None):
        self.count = count
        super().__init__(message or f"expected exactly one zero, found {count}")


class DomainError(ErgPhaseError, ValueError):
    """Parameters outside the domain where the requested quantity exists."""


class TieNotBracketed(ErgPhaseError, RuntimeError):
    """Tie bisection bracket failed to contain a sign change."""


class InternalInconsistency(ErgPhaseError, RuntimeError):
    """Two redundant computations of the same quantity disagree."""


class UnsupportedDistribution(ErgPhaseError, ValueError):
    """Operation is only defined for specific distribution kinds."""


class UnsupportedSubgraph(ErgPhaseError, ValueError):
    """Subgraph too large (or malformed) for density computation."""


class TooLarge(ErgPhaseError, ValueError):
    """Exact enumeration requested beyond the tractable size limit."""


class QuadratureFailure(ErgPhaseError, RuntimeError):
    """Adaptive quadrature did not converge within the node budget."""
