"""Near-degeneracy approximations and exact-vs-approximate reports.

Far from the origin the parameter plane splits along beta1 = -beta2 into a
sparse region (typical graph almost empty) and a nearly complete region
(almost full).  The dual tilt of the optimal density is universal there,

    theta ~ 2 beta1                      (sparse)
    theta ~ 2 (beta1 + p beta2)          (nearly complete)

while the optimal density itself stays distribution-dependent; closed-form
density approximations exist for the two classical laws.  The free energy
is universal only in the nearly complete region (~ beta1 + beta2).
Approximations are read as ratio -> 1 along rays in the parameter plane.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .distributions import Bernoulli, EdgeWeightDistribution, Uniform01
from .errors import DomainError, UnsupportedDistribution
from .variational import Maximizer, MaximizerSet, ModelParams, maximizers


class Region(enum.Enum):
    SPARSE = "sparse"
    NEARLY_COMPLETE = "nearly_complete"


@dataclass(frozen=True)
class DegeneracyReport:
    """One row of an exact-vs-asymptotic comparison table."""

    params: ModelParams
    theta_opt: float
    u_opt: float
    theta_approx: float
    u_approx: float | None
    psi_exact: float
    psi_approx: float
    region: Region


def region_of(params: ModelParams) -> Region:
    if params.beta1 == -params.beta2:
        raise DomainError(
            "beta1 = -beta2 is the dividing line; no region is defined there"
        )
    if params.beta1 < -params.beta2:
        return Region.SPARSE
    return Region.NEARLY_COMPLETE


def theta_approx(params: ModelParams) -> float:
    """Universal tilt approximation: 2*beta1 sparse, 2*(beta1+p*beta2) nearly complete."""
    if region_of(params) is Region.SPARSE:
        return 2.0 * params.beta1
    return 2.0 * (params.beta1 + params.p * params.beta2)


def u_approx_closed_form(dist: EdgeWeightDistribution, params: ModelParams) -> float:
    """Closed-form density approximation; only the two classical laws have one."""
    reg = region_of(params)
    if isinstance(dist, Bernoulli) and dist.q == 0.5:
        if reg is Region.SPARSE:
            return math.exp(2.0 * params.beta1)
        return 1.0 - math.exp(-2.0 * (params.beta1 + params.p * params.beta2))
    if isinstance(dist, Uniform01):
        if reg is Region.SPARSE:
            return -1.0 / (2.0 * params.beta1)
        return 1.0 - 1.0 / (2.0 * (params.beta1 + params.p * params.beta2))
    raise UnsupportedDistribution(
        "closed-form density approximations exist only for bernoulli(q=0.5) "
        f"and uniform, not {dist.spec_string()} "
        "(the optimal density is not universal)"
    )


def psi_approx(dist: EdgeWeightDistribution, params: ModelParams) -> float:
    """Free-energy approximation: distribution-dependent sparse form, universal
    beta1+beta2 in the nearly complete region."""
    reg = region_of(params)
    if reg is Region.SPARSE:
        t = 2.0 * params.beta1
        k0, k1, _, _ = dist.cumulants(t)
        return (1 - params.p) * params.beta2 * k1 ** params.p + 0.5 * k0
    return params.beta1 + params.beta2


def er_comparison(dist: EdgeWeightDistribution, params: ModelParams, u: float):
    """Free energy of the weighted model vs its one-parameter homogeneous twin.

    At the maximizing density u of a bernoulli(0.5) model, the model's free
    energy reduces to (1-p) beta2 u^p - log(1-u)/2, while the homogeneous
    random graph matching the same density has free energy -log(1-u)/2.
    The gap (1-p) beta2 u^p separates parameter points that produce the
    same typical graph.
    """
    if not (isinstance(dist, Bernoulli) and dist.q == 0.5):
        raise UnsupportedDistribution(
            "the comparison derivation applies to bernoulli(q=0.5) weights"
        )
    if params.beta2 < 0.0:
        raise DomainError("comparison requires beta2 >= 0")
    if not 0.0 < u < 1.0:
        raise ValueError("u must be strictly inside (0, 1)")
    psi_exp = (1 - params.p) * params.beta2 * u ** params.p - 0.5 * math.log1p(-u)
    psi_er = -0.5 * math.log1p(-u)
    return psi_exp, psi_er


def degeneracy_report(dist: EdgeWeightDistribution, params: ModelParams) -> DegeneracyReport:
    """Exact stationary solution next to its near-degeneracy approximations."""
    reg = region_of(params)
    mset: MaximizerSet = maximizers(dist, params)
    point: Maximizer = mset.points[-1] if reg is Region.NEARLY_COMPLETE else mset.points[0]
    try:
        u_app = u_approx_closed_form(dist, params)
    except UnsupportedDistribution:
        u_app = None
    return DegeneracyReport(
        params=params,
        theta_opt=point.theta,
        u_opt=point.u,
        theta_approx=theta_approx(params),
        u_approx=u_app,
        psi_exact=mset.psi,
        psi_approx=psi_approx(dist, params),
        region=reg,
    )


# The classical near-degeneracy comparison rows (p = 2): two tilts per law,
# one sparse and one nearly complete.
CLASSIC_TABLE_POINTS = (
    (Bernoulli(0.5), ModelParams(-2.0, -4.0, 2)),
    (Bernoulli(0.5), ModelParams(1.0, 1.0, 2)),
    (Uniform01(), ModelParams(-4.0, -6.0, 2)),
    (Uniform01(), ModelParams(3.0, 2.0, 2)),
)


def classic_tables():
    """Reports for the standard bernoulli/uniform near-degeneracy rows."""
    return [degeneracy_report(dist, params) for dist, params in CLASSIC_TABLE_POINTS]
