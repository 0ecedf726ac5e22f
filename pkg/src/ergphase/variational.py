"""Free-energy maximization and the first-order transition curve.

The limiting free energy of the two-parameter model is the supremum over
mean edge weight u of

    L(u) = beta1 * u + beta2 * u^p - I(u) / 2,

with I the conjugate rate function of the edge-weight law.  All
optimization happens in dual coordinates: stationarity of L transforms to

    g(theta) = beta1 + p * beta2 * K'(theta)^(p-1) - theta / 2 = 0,

which is smooth and globally bracketed (g -> +inf as theta -> -inf and
-inf as theta -> +inf), while L'(u) has singular endpoints.  The curvature
structure is controlled by

    n(theta) = 2 p (p-1) K''(theta) K'(theta)^(p-2),
    m(u) = 1 / n(theta(u)),

whose unique extremum (guaranteed by a one-zero condition on
K''' K' + (p-2) K''^2) produces the corner of the region where two local
maximizers coexist.  The transition value of beta2 at fixed beta1 is the
unique tie of the two local maxima, found by bisecting the score gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .distributions import THETA_GUARD, EdgeWeightDistribution, assumption_zeros
from .errors import (
    AssumptionViolated,
    BracketFailure,
    DomainError,
    InternalInconsistency,
    RangeExhausted,
    TieNotBracketed,
)
from .legendre import DualPair, dual_of, rate

# tie declared when the two maximal scores agree this closely
TIE_TOL = 1e-10

# |score gap| target for the transition bisection
_TIE_GAP_TOL = 1e-10

# stationarity sign-change scan
_STATIONARY_GRID = 10_001

# refusal margin around the critical beta1 where the tie solve degenerates
CRITICAL_MARGIN = 1e-6

# default certification window for the one-zero condition
_ASSUMPTION_RANGE = 30.0
_ASSUMPTION_GRID = 10_001

_STATIONARY_RESIDUAL_TOL = 1e-9
_PSI_DUAL_TOL = 1e-8


@dataclass(frozen=True)
class ModelParams:
    """Edge coefficient, subgraph coefficient, and subgraph edge count."""

    beta1: float
    beta2: float
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise ValueError(f"p={self.p!r} must be an integer >= 2")
        object.__setattr__(self, "p", int(self.p))


@dataclass(frozen=True)
class Maximizer:
    """A global maximizer of L with its dual tilt and score."""

    u: float
    theta: float
    score: float


@dataclass(frozen=True)
class MaximizerSet:
    points: tuple[Maximizer, ...]
    psi: float
    on_transition: bool


@dataclass(frozen=True)
class CriticalPoint:
    beta1_c: float
    beta2_c: float
    u0: float
    theta0: float


@dataclass(frozen=True)
class PhaseCurve:
    samples: tuple[tuple[float, float], ...]
    critical: CriticalPoint


# ---------------------------------------------------------------------------
# score and stationarity
# ---------------------------------------------------------------------------


def score(dist: EdgeWeightDistribution, params: ModelParams, u: float) -> float:
    """L(u) = beta1 u + beta2 u^p - I(u)/2."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"u={u!r} must be strictly inside (0, 1)")
    return params.beta1 * u + params.beta2 * u ** params.p - 0.5 * rate(dist, u)


def _score_at_theta(dist, params, theta):
    """L evaluated through the dual pair (u = K'(theta)); vectorized."""
    k0, k1, _, _ = dist.cumulants(theta)
    return (
        params.beta1 * k1
        + params.beta2 * k1 ** params.p
        - 0.5 * (theta * k1 - k0)
    )


def _g(dist, params, theta):
    """Stationarity function in dual coordinates; vectorized."""
    k1 = dist.cumulants(theta)[1]
    return params.beta1 + params.p * params.beta2 * k1 ** (params.p - 1) - 0.5 * np.asarray(theta)


def _theta_scan_limit(params) -> float:
    lim = 2.0 * abs(params.beta1) + 2.0 * params.p * abs(params.beta2) + 50.0
    return min(lim, THETA_GUARD)


def _stationary_with_direction(dist, params):
    """All roots of g with their crossing direction (True = downward)."""
    tmax = _theta_scan_limit(params)
    thetas = np.linspace(-tmax, tmax, _STATIONARY_GRID)
    g = np.asarray(_g(dist, params, thetas))

    def g_scalar(t):
        return float(_g(dist, params, float(t)))

    roots = []
    for i in range(len(thetas) - 1):
        a, b = g[i], g[i + 1]
        if a == 0.0:
            if i == 0 or g[i - 1] != 0.0:
                down = (g[i - 1] > 0.0) if i > 0 else (b < 0.0)
                roots.append((float(thetas[i]), down))
            continue
        if (a < 0.0) != (b < 0.0) and b != 0.0:
            t = brentq(g_scalar, float(thetas[i]), float(thetas[i + 1]),
                       xtol=1e-13, rtol=8.9e-16, maxiter=200)
            roots.append((float(t), a > 0.0))
    if not roots:
        raise RangeExhausted(
            f"no stationarity sign change on [-{tmax:g}, {tmax:g}]"
        )
    return roots


def stationary_points(dist: EdgeWeightDistribution, params: ModelParams):
    """All solutions of the dual stationarity condition, ordered by theta."""
    return [
        DualPair(u=float(dist.cumulants(t)[1]), theta=t)
        for t, _ in _stationary_with_direction(dist, params)
    ]


def _check_stationary_residual(dist, params, theta):
    resid = abs(float(_g(dist, params, theta)))
    if resid > _STATIONARY_RESIDUAL_TOL:
        raise InternalInconsistency(
            f"stationarity residual {resid:.3e} at theta={theta:.6g}"
        )


def maximizers(
    dist: EdgeWeightDistribution,
    params: ModelParams,
    tie_tol: float = TIE_TOL,
) -> MaximizerSet:
    """Global maximizer(s) of L: downward crossings of g, scored and tied.

    Two points are returned exactly when the two best scores agree within
    tie_tol, which is the signature of the first-order transition.
    """
    candidates = []
    for theta, down in _stationary_with_direction(dist, params):
        if not down:
            continue
        _check_stationary_residual(dist, params, theta)
        k0, k1, _, _ = dist.cumulants(theta)
        s = params.beta1 * k1 + params.beta2 * k1 ** params.p - 0.5 * (theta * k1 - k0)
        candidates.append(Maximizer(u=float(k1), theta=float(theta), score=float(s)))
    if not candidates:
        raise RangeExhausted("no local maximum found on the scan range")
    best = max(c.score for c in candidates)
    points = tuple(
        sorted((c for c in candidates if best - c.score <= tie_tol), key=lambda c: c.u)
    )
    return MaximizerSet(points=points, psi=best, on_transition=len(points) == 2)


def psi_infinity(dist: EdgeWeightDistribution, params: ModelParams) -> float:
    """The limiting free energy, with a primal/dual consistency check.

    The primal value sup L(u) must match the dual form
    (1-p) beta2 K'(theta)^p + K(theta)/2 at the maximizing tilt.
    """
    mset = maximizers(dist, params)
    point = mset.points[-1]
    k0 = dist.log_mgf(point.theta)
    dual_val = (1 - params.p) * params.beta2 * point.u ** params.p + 0.5 * k0
    if abs(dual_val - mset.psi) > _PSI_DUAL_TOL:
        raise InternalInconsistency(
            f"primal psi {mset.psi:.12g} vs dual psi {dual_val:.12g}"
        )
    return mset.psi


# ---------------------------------------------------------------------------
# curvature functions m, n, f
# ---------------------------------------------------------------------------


def n_of(dist: EdgeWeightDistribution, p: int, theta: float) -> float:
    """n(theta) = 2 p (p-1) K'' K'^(p-2)."""
    _, k1, k2, _ = dist.cumulants(theta)
    return float(2.0 * p * (p - 1) * k2 * k1 ** (p - 2))


def _m_from_theta(dist, p, theta, u=None):
    _, k1, k2, _ = dist.cumulants(theta)
    if u is None:
        u = k1
    return 1.0 / (2.0 * p * (p - 1) * k2 * u ** (p - 2))


def _f_from_theta(dist, p, theta, u=None):
    _, k1, k2, _ = dist.cumulants(theta)
    if u is None:
        u = k1
    return u / (2.0 * (p - 1) * k2) - 0.5 * theta


def m_of(dist: EdgeWeightDistribution, p: int, u: float) -> float:
    """m(u) = I''(u) / (2 p (p-1) u^(p-2)), via duality."""
    pair = dual_of(dist, u)
    return float(_m_from_theta(dist, p, pair.theta, u=u))


def f_of(dist: EdgeWeightDistribution, p: int, u: float) -> float:
    """f(u) = u I''(u) / (2 (p-1)) - I'(u) / 2, via duality."""
    pair = dual_of(dist, u)
    return float(_f_from_theta(dist, p, pair.theta, u=u))


# ---------------------------------------------------------------------------
# critical point and transition curve
# ---------------------------------------------------------------------------


def critical_point(
    dist: EdgeWeightDistribution,
    p: int,
    theta_scan: float = _ASSUMPTION_RANGE,
    grid: int = _ASSUMPTION_GRID,
) -> CriticalPoint:
    """Corner of the two-maximizer region.

    Requires the curvature balance K''' K' + (p-2) K''^2 to have exactly
    one zero on the scan window; anything else raises AssumptionViolated
    rather than guessing among multiple transition curves.
    """
    zeros = assumption_zeros(dist, p, -theta_scan, theta_scan, grid)
    if len(zeros) != 1:
        raise AssumptionViolated(
            len(zeros),
            f"curvature balance has {len(zeros)} zeros on "
            f"[-{theta_scan:g}, {theta_scan:g}], need exactly 1",
        )
    theta0 = zeros[0]
    u0 = float(dist.cumulants(theta0)[1])
    beta1_c = -_f_from_theta(dist, p, theta0, u=u0)
    beta2_c = _m_from_theta(dist, p, theta0, u=u0)
    return CriticalPoint(
        beta1_c=float(beta1_c), beta2_c=float(beta2_c), u0=u0, theta0=float(theta0)
    )


def _solve_f_equals(dist, p, target, theta0, side):
    """Root of f(theta) = target on one side of theta0 (side = -1 left, +1 right).

    f is monotone away from theta0 on each side and grows unbounded, so a
    doubling walk brackets the root.
    """

    def resid(t):
        return _f_from_theta(dist, p, t) - target

    step = 1.0
    prev = theta0
    while True:
        t = theta0 + side * step
        if abs(t) >= THETA_GUARD:
            t = math.copysign(THETA_GUARD, t)
            if resid(t) < 0.0:
                raise BracketFailure(
                    f"f(theta)={target:g} not reachable within |theta|<={THETA_GUARD:g}"
                )
            break
        if resid(t) > 0.0:
            break
        prev = t
        step *= 2.0
    lo, hi = (t, prev) if side < 0 else (prev, t)
    return brentq(resid, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)


def _bounding_curves_impl(dist, p, beta1, cp):
    if not beta1 < cp.beta1_c:
        raise DomainError(
            f"beta1={beta1:g} must lie below the critical beta1 {cp.beta1_c:g}"
        )
    theta_a = _solve_f_equals(dist, p, -beta1, cp.theta0, side=-1)
    theta_b = _solve_f_equals(dist, p, -beta1, cp.theta0, side=+1)
    upper = _m_from_theta(dist, p, theta_a)
    lower = _m_from_theta(dist, p, theta_b)
    return upper, lower, theta_a, theta_b


def bounding_curves(dist: EdgeWeightDistribution, p: int, beta1: float):
    """The two beta2 levels between which L has two local maximizers.

    Returns (upper, lower): above `upper` only the high-density maximizer
    survives, below `lower` only the low-density one.
    """
    cp = critical_point(dist, p)
    upper, lower, _, _ = _bounding_curves_impl(dist, p, beta1, cp)
    return upper, lower


def _solve_n_equals(dist, p, level, theta0, side):
    """Root of n(theta) = level on one side of the peak theta0.

    Returns None when the curvature stays above the level all the way to
    the rightward guard (the branch lives beyond the evaluable range).
    """

    def resid(t):
        return n_of(dist, p, t) - level

    step = 1.0
    prev = theta0
    while True:
        t = theta0 + side * step
        if abs(t) >= THETA_GUARD:
            t = math.copysign(THETA_GUARD, t)
            if resid(t) > 0.0:
                if side > 0:
                    return None
                raise BracketFailure("curvature level not bracketed within guard")
            break
        if resid(t) < 0.0:
            break
        prev = t
        step *= 2.0
    lo, hi = (t, prev) if side < 0 else (prev, t)
    return brentq(resid, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)


def _outer_maxima_gap(dist, params, cp):
    """Score(right local max) - score(left local max) at fixed params.

    Returns -inf/+inf when the right/left maximizer has merged away, which
    steers the tie bisection back inside the coexistence interval.  Uses the
    curvature decomposition: g is decreasing outside [theta_l, theta_r]
    (where n(theta) = 1/beta2) and increasing inside, so each outer branch
    carries at most one downward crossing.
    """
    level = 1.0 / params.beta2
    theta_l = _solve_n_equals(dist, params.p, level, cp.theta0, side=-1)
    theta_r = _solve_n_equals(dist, params.p, level, cp.theta0, side=+1)
    if theta_r is None:
        # convex branch extends beyond the guard: beta2 is far above the
        # tie and the high-density maximizer certainly dominates
        return math.inf, None, None

    def g_scalar(t):
        return float(_g(dist, params, float(t)))

    g_l, g_r = g_scalar(theta_l), g_scalar(theta_r)
    if g_l >= 0.0:
        return math.inf, None, None
    if g_r <= 0.0:
        return -math.inf, None, None

    def downward_root(anchor, side, f_anchor):
        # walk outward from the branch endpoint until g flips sign
        step = 1.0
        prev = anchor
        while True:
            t = anchor + side * step
            if abs(t) >= THETA_GUARD:
                t = math.copysign(THETA_GUARD, t)
                if (g_scalar(t) < 0.0) == (f_anchor < 0.0):
                    if side > 0:
                        return None
                    raise BracketFailure("stationary root escaped the guard range")
                break
            if (g_scalar(t) < 0.0) != (f_anchor < 0.0):
                break
            prev = t
            step *= 2.0
        lo, hi = (t, prev) if side < 0 else (prev, t)
        return brentq(g_scalar, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)

    theta_left = downward_root(theta_l, -1, g_l)
    theta_right = downward_root(theta_r, +1, g_r)
    if theta_right is None:
        return math.inf, None, None
    s_left = float(_score_at_theta(dist, params, theta_left))
    s_right = float(_score_at_theta(dist, params, theta_right))
    return s_right - s_left, theta_left, theta_right


def transition_beta2(dist: EdgeWeightDistribution, p: int, beta1: float) -> float:
    """The transition value r(beta1): the beta2 where both maxima tie.

    The score gap is strictly increasing in beta2 on the coexistence
    interval; plain bisection drives it below 1e-10.  Within the refusal
    margin of the critical beta1 the gap derivative vanishes and the solve
    is refused.
    """
    cp = critical_point(dist, p)
    return _transition_beta2_impl(dist, p, beta1, cp)


def _transition_beta2_impl(dist, p, beta1, cp):
    if not beta1 < cp.beta1_c - CRITICAL_MARGIN:
        raise DomainError(
            f"beta1={beta1:g} not below critical beta1 {cp.beta1_c:g} "
            f"by margin {CRITICAL_MARGIN:g}"
        )
    upper, lower, _, _ = _bounding_curves_impl(dist, p, beta1, cp)
    lo, hi = lower, upper  # gap < 0 at lower, > 0 at upper
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        gap, _, _ = _outer_maxima_gap(dist, ModelParams(beta1, mid, p), cp)
        if math.isfinite(gap) and abs(gap) < _TIE_GAP_TOL:
            return float(mid)
        if gap > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 2.0 * math.ulp(max(abs(lo), abs(hi))):
            raise TieNotBracketed(
                f"tie gap stuck at {gap:.3e} with interval exhausted"
            )
    raise TieNotBracketed("tie bisection did not converge in 500 steps")


def phase_curve(
    dist: EdgeWeightDistribution,
    p: int,
    beta1_min: float,
    step: float,
) -> PhaseCurve:
    """Sample the transition curve from beta1_min up to the critical point."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    cp = critical_point(dist, p)
    if not beta1_min < cp.beta1_c:
        raise DomainError(
            f"beta1_min={beta1_min:g} must lie below critical beta1 {cp.beta1_c:g}"
        )
    samples = []
    b1 = beta1_min
    while b1 < cp.beta1_c - CRITICAL_MARGIN:
        samples.append((float(b1), _transition_beta2_impl(dist, p, b1, cp)))
        b1 += step
    samples.append((cp.beta1_c, cp.beta2_c))
    betas = [s[1] for s in samples]
    if any(b_next >= b_prev for b_prev, b_next in zip(betas, betas[1:])):
        raise InternalInconsistency("transition curve is not strictly decreasing")
    return PhaseCurve(samples=tuple(samples), critical=cp)
