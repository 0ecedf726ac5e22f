"""Phase structure of two-parameter edge-weighted exponential random graphs.

Library layout:

- `distributions`: edge-weight laws and their cumulant generating functions
- `legendre`: the conjugate rate function via convex duality
- `variational`: free-energy maximization, critical point, transition curve
- `asymptotics`: near-degeneracy approximations and comparison reports
- `sampler`: finite-size Metropolis chain and homomorphism densities
- `cli`: the `ergphase` command-line front end
"""

from .distributions import (
    Bernoulli,
    Beta,
    CumulantDerivatives,
    Discrete,
    EdgeWeightDistribution,
    Uniform01,
    assumption_zero_count,
    cumulant,
    cumulant_derivatives,
    parse_distribution,
    sample_weight,
)
from .errors import (
    AssumptionViolated,
    BracketFailure,
    DegenerateDistribution,
    DomainError,
    ErgPhaseError,
    InternalInconsistency,
    OverflowGuard,
    RangeExhausted,
    TieNotBracketed,
    TooLarge,
    UnsupportedDistribution,
    UnsupportedSubgraph,
)

__all__ = [
    "Bernoulli",
    "Beta",
    "CumulantDerivatives",
    "Discrete",
    "EdgeWeightDistribution",
    "Uniform01",
    "assumption_zero_count",
    "cumulant",
    "cumulant_derivatives",
    "parse_distribution",
    "sample_weight",
    "AssumptionViolated",
    "BracketFailure",
    "DegenerateDistribution",
    "DomainError",
    "ErgPhaseError",
    "InternalInconsistency",
    "OverflowGuard",
    "RangeExhausted",
    "TieNotBracketed",
    "TooLarge",
    "UnsupportedDistribution",
    "UnsupportedSubgraph",
]
