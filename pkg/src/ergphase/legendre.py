"""Conjugate rate function of the edge-weight law via convex duality.

K' is a strictly increasing bijection from the real line onto the interior
of the support hull, so every u in (0, 1) has a unique dual tilt theta with
K'(theta) = u.  The rate function and its derivatives never need their own
representation:

    I(u)  = theta * u - K(theta)
    I'(u) = theta
    I''(u) = 1 / K''(theta)

Every call re-solves the dual; a solve is a handful of microseconds and the
absence of interpolation keeps the accuracy guarantees simple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .distributions import THETA_GUARD, EdgeWeightDistribution
from .errors import BracketFailure, InternalInconsistency

# |K'(theta) - u| at the returned dual
DUAL_TOL = 1e-11

# boundary classification: tilt ladder, convergence and divergence thresholds
_T_LADDER = (10.0, 20.0, 40.0, 80.0, 160.0)
_CAUCHY_TOL = 1e-8
_DIVERGENCE_CEILING = 1e6


@dataclass(frozen=True)
class DualPair:
    """A matched coordinate pair: u = K'(theta), theta = I'(u)."""

    u: float
    theta: float


@dataclass(frozen=True)
class BoundaryBehavior:
    """Values of the rate function at the interval endpoints.

    `math.inf` marks an endpoint where the rate function grows unbounded.
    """

    at_zero: float
    at_one: float

    @property
    def finite_at_zero(self) -> bool:
        return math.isfinite(self.at_zero)

    @property
    def finite_at_one(self) -> bool:
        return math.isfinite(self.at_one)


def dual_of(dist: EdgeWeightDistribution, u: float) -> DualPair:
    """Solve K'(theta) = u for the unique dual tilt.

    Brackets by geometric expansion from [-1, 1], then refines with a
    hybrid bisection/secant solve.  The evaluation guard on |theta| binds
    before the nominal 1e4 expansion limit: u values whose dual lies
    outside the guard raise BracketFailure.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"u={u!r} must be strictly inside (0, 1)")

    def resid(theta):
        return dist.cumulants(theta)[1] - u

    lo, hi = -1.0, 1.0
    flo, fhi = resid(lo), resid(hi)
    while flo > 0.0:
        if lo <= -THETA_GUARD:
            raise BracketFailure(
                f"dual of u={u:g} lies below theta=-{THETA_GUARD:g}"
            )
        lo = max(lo * 2.0, -THETA_GUARD)
        flo = resid(lo)
    while fhi < 0.0:
        if hi >= THETA_GUARD:
            raise BracketFailure(
                f"dual of u={u:g} lies above theta={THETA_GUARD:g}"
            )
        hi = min(hi * 2.0, THETA_GUARD)
        fhi = resid(hi)
    theta = brentq(resid, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    if abs(resid(theta)) > DUAL_TOL:
        raise InternalInconsistency(
            f"dual residual {abs(resid(theta)):.3e} exceeds {DUAL_TOL:g}"
        )
    return DualPair(u=u, theta=float(theta))


def rate(dist: EdgeWeightDistribution, u: float) -> float:
    """I(u) = theta * u - K(theta) at the dual tilt."""
    pair = dual_of(dist, u)
    return pair.theta * u - dist.log_mgf(pair.theta)


def rate_derivatives(dist: EdgeWeightDistribution, u: float):
    """(I'(u), I''(u)) = (theta, 1 / K''(theta))."""
    pair = dual_of(dist, u)
    k2 = dist.cumulants(pair.theta)[2]
    return pair.theta, 1.0 / k2


def boundary_behavior(dist: EdgeWeightDistribution) -> BoundaryBehavior:
    """Classify I(0) and I(1) as finite values or unbounded growth.

    Evaluates theta*u - K(theta) at u in {0, 1} along the tilt ladder; the
    endpoint is finite when the ladder is Cauchy, unbounded when it keeps
    growing or exceeds the divergence ceiling.
    """

    def classify(values):
        if max(abs(v) for v in values) > _DIVERGENCE_CEILING:
            return math.inf
        if abs(values[-1] - values[-2]) < _CAUCHY_TOL:
            return values[-1]
        return math.inf

    at_zero = classify([-dist.log_mgf(-t) for t in _T_LADDER])
    at_one = classify([t - dist.log_mgf(t) for t in _T_LADDER])
    return BoundaryBehavior(at_zero=at_zero, at_one=at_one)
