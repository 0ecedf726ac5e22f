"""Edge-weight distributions and their cumulant generating functions.

Everything downstream (rate functions, free energies, phase curves) is driven
by the log moment generating function

    K(theta) = log E[exp(theta * X)],    X ~ mu on [0, 1],

and its first three derivatives, which are the mean, variance and third
central moment of the exponentially tilted distribution.  Evaluation is done
through *tilted moments* factored at the dominant support endpoint,

    n_k(theta) = E[X^k exp(theta * (X - xhat))],   xhat = argmax theta * x,

so that every exponential in play is <= 1 and nothing overflows for
|theta| <= THETA_GUARD.  The derivatives are then exact moment-ratio
identities:

    K  = theta * xhat + log n_0
    K' = n_1 / n_0
    K'' = n_2 / n_0 - (K')^2
    K''' = n_3 / n_0 - 3 K' (n_2 / n_0) + 2 (K')^3

All kinds accept scalar or ndarray theta and are pure value types; they are
safe to share between threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, hyp1f1, poch, roots_jacobi

from .errors import (
    DegenerateDistribution,
    OverflowGuard,
    QuadratureFailure,
)

# Largest |theta| we evaluate at.  exp() overflows at ~709.78; the margin
# absorbs polynomial prefactors in the beta-kind hypergeometric values.
THETA_GUARD = 700.0

# Probabilities must sum to one within this.
_PROB_TOL = 1e-12

# Declared symmetry is verified against moments at construction.
_SYMMETRY_TOL = 1e-9


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise OverflowGuard("theta must be finite")
    if np.any(np.abs(theta) > THETA_GUARD):
        raise OverflowGuard(
            f"|theta| exceeds guard {THETA_GUARD:g}; tilted moments would overflow"
        )
    return theta


@dataclass(frozen=True)
class CumulantDerivatives:
    """K and its first three derivatives at a single tilt."""

    k0: float
    k1: float
    k2: float
    k3: float


class EdgeWeightDistribution:
    """Base class: a non-degenerate distribution on [0, 1].

    Subclasses provide `_tilted_moments`, exact `mean`/`var`, sampling and a
    parseable spec string.  The base class turns tilted moments into K and
    its derivatives.
    """

    symmetric: bool

    # -- kind-specific hooks -------------------------------------------------

    def _tilted_moments(self, theta: np.ndarray):
        """Return (xhat, n0, n1, n2, n3) arrays for an array theta."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def var(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError

    # -- cumulant generating function ----------------------------------------

    def log_mgf(self, theta):
        """K(theta), vectorized; K(0) == 0 exactly."""
        theta_arr = _check_theta(theta)
        scalar = theta_arr.ndim == 0
        theta_arr = np.atleast_1d(theta_arr)
        xhat, n0, _, _, _ = self._tilted_moments(theta_arr)
        out = theta_arr * xhat + np.log(n0)
        return float(out[0]) if scalar else out

    def cumulants(self, theta):
        """(K, K', K'', K''') arrays for scalar or ndarray theta."""
        theta_arr = _check_theta(theta)
        scalar = theta_arr.ndim == 0
        theta_arr = np.atleast_1d(theta_arr)
        xhat, n0, n1, n2, n3 = self._tilted_moments(theta_arr)
        k0 = theta_arr * xhat + np.log(n0)
        r1 = n1 / n0
        r2 = n2 / n0
        r3 = n3 / n0
        k1 = r1
        k2 = r2 - r1 * r1
        k3 = r3 - 3.0 * r1 * r2 + 2.0 * r1 ** 3
        if scalar:
            return float(k0[0]), float(k1[0]), float(k2[0]), float(k3[0])
        return k0, k1, k2, k3

    def _verify_symmetry(self):
        # moment check: a symmetric law has mean 1/2 and vanishing third
        # central moment; mismatch with the declared flag is a construction bug
        if self.symmetric:
            _, k1, _, k3 = self.cumulants(0.0)
            if abs(k1 - 0.5) > _SYMMETRY_TOL or abs(k3) > _SYMMETRY_TOL:
                raise DegenerateDistribution(
                    "distribution declared symmetric but moments disagree"
                )

    def _check_nondegenerate(self):
        if self.var() <= 0.0:
            raise DegenerateDistribution(
                f"{self.spec_string()} has zero variance"
            )


# ---------------------------------------------------------------------------
# atomic kinds
# ---------------------------------------------------------------------------


def _atom_tilted_moments(xs, ps, theta):
    xhat = np.where(theta > 0.0, xs[-1], xs[0])
    # (len(theta), len(xs)); every exponent is <= 0
    expo = np.exp(theta[:, None] * (xs[None, :] - xhat[:, None]))
    n = [expo @ (ps * xs ** k) for k in range(4)]
    return (xhat, *n)


@dataclass(frozen=True)
class Discrete(EdgeWeightDistribution):
    """Finitely many atoms in [0, 1]; atoms as ((x, p), ...) sorted by x."""

    atoms: tuple[tuple[float, float], ...]
    symmetric: bool = field(init=False)

    def __post_init__(self):
        if len(self.atoms) < 1:
            raise DegenerateDistribution("discrete distribution needs atoms")
        xs = np.array([x for x, _ in self.atoms], dtype=float)
        ps = np.array([p for _, p in self.atoms], dtype=float)
        if np.any(xs < 0.0) or np.any(xs > 1.0):
            raise DegenerateDistribution("atoms must lie in [0, 1]")
        if np.any(ps < 0.0):
            raise DegenerateDistribution("atom probabilities must be >= 0")
        if abs(ps.sum() - 1.0) > _PROB_TOL:
            raise DegenerateDistribution(
                f"atom probabilities sum to {ps.sum():.17g}, not 1"
            )
        if len(np.unique(xs)) != len(xs):
            raise DegenerateDistribution("duplicate atoms")
        order = np.argsort(xs)
        object.__setattr__(
            self, "atoms", tuple((float(xs[i]), float(ps[i])) for i in order)
        )
        object.__setattr__(self, "symmetric", self._mirror_symmetric())
        self._check_nondegenerate()
        self._verify_symmetry()

    def _mirror_symmetric(self) -> bool:
        # atom-by-atom: for each (x, p) there must be (1 - x, p)
        table = {x: p for x, p in self.atoms}
        for x, p in self.atoms:
            q = None
            for y, py in self.atoms:
                if abs(y - (1.0 - x)) < 1e-12:
                    q = py
                    break
            if q is None or abs(q - p) > 1e-12:
                return False
        return True

    def _xs_ps(self):
        xs = np.array([x for x, _ in self.atoms])
        ps = np.array([p for _, p in self.atoms])
        return xs, ps

    def _tilted_moments(self, theta):
        xs, ps = self._xs_ps()
        return _atom_tilted_moments(xs, ps, theta)

    def mean(self):
        xs, ps = self._xs_ps()
        return float(ps @ xs)

    def var(self):
        xs, ps = self._xs_ps()
        m = ps @ xs
        return float(ps @ xs ** 2 - m * m)

    def sample(self, rng, size=None):
        xs, ps = self._xs_ps()
        idx = rng.choice(len(xs), size=size, p=ps)
        return xs[idx] if size is not None else float(xs[idx])

    def spec_string(self):
        return "discrete:" + ",".join(f"{x:g}={p:g}" for x, p in self.atoms)


@dataclass(frozen=True)
class Bernoulli(EdgeWeightDistribution):
    """Weights in {0, 1} with success probability q."""

    q: float
    symmetric: bool = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise DegenerateDistribution(
                f"bernoulli q={self.q!r} must be strictly inside (0, 1)"
            )
        object.__setattr__(self, "symmetric", self.q == 0.5)
        self._verify_symmetry()

    def _tilted_moments(self, theta):
        xs = np.array([0.0, 1.0])
        ps = np.array([1.0 - self.q, self.q])
        return _atom_tilted_moments(xs, ps, theta)

    def mean(self):
        return self.q

    def var(self):
        return self.q * (1.0 - self.q)

    def sample(self, rng, size=None):
        u = rng.random(size)
        if size is None:
            return 1.0 if u < self.q else 0.0
        return (u < self.q).astype(float)

    def spec_string(self):
        return f"bernoulli:q={self.q:g}"


# ---------------------------------------------------------------------------
# uniform on [0, 1]
# ---------------------------------------------------------------------------

_SERIES_CUT = 0.5
_SERIES_TERMS = 26


def _uniform_moments_neg(t):
    """M_k(t) = int_0^1 x^k e^{t x} dx for t <= 0, k = 0..3, stable."""
    t = np.asarray(t, dtype=float)
    out = np.empty((4,) + t.shape)
    small = np.abs(t) < _SERIES_CUT
    # series sum_j t^j / (j! (k + j + 1)); converges to machine eps in <= 26 terms
    if np.any(small):
        ts = t[small]
        for k in range(4):
            acc = np.zeros_like(ts)
            term = np.ones_like(ts)  # t^j / j!
            for j in range(_SERIES_TERMS):
                acc += term / (k + j + 1.0)
                term = term * ts / (j + 1.0)
            out[k][small] = acc
    big = ~small
    if np.any(big):
        tb = t[big]
        et = np.exp(tb)
        m = -np.expm1(tb) / (-tb)
        out[0][big] = m
        for k in range(1, 4):
            m = (et - k * m) / tb
            out[k][big] = m
    return out


@dataclass(frozen=True)
class Uniform01(EdgeWeightDistribution):
    """Lebesgue measure on [0, 1]."""

    symmetric: bool = field(init=False, default=True)

    def __post_init__(self):
        self._verify_symmetry()

    def _tilted_moments(self, theta):
        xhat = np.where(theta > 0.0, 1.0, 0.0)
        n = np.empty((4,) + theta.shape)
        neg = theta <= 0.0
        if np.any(neg):
            n[:, neg] = _uniform_moments_neg(theta[neg])
        pos = ~neg
        if np.any(pos):
            # n_k(t) = int (1-s)^k e^{-t s} ds: binomial combination of M_j(-t)
            m = _uniform_moments_neg(-theta[pos])
            n[0][pos] = m[0]
            n[1][pos] = m[0] - m[1]
            n[2][pos] = m[0] - 2.0 * m[1] + m[2]
            n[3][pos] = m[0] - 3.0 * m[1] + 3.0 * m[2] - m[3]
        return (xhat, n[0], n[1], n[2], n[3])

    def mean(self):
        return 0.5

    def var(self):
        return 1.0 / 12.0

    def sample(self, rng, size=None):
        u = rng.random(size)
        return float(u) if size is None else u

    def spec_string(self):
        return "uniform"


# ---------------------------------------------------------------------------
# beta(a, b)
# ---------------------------------------------------------------------------

_jacobi_cache: dict = {}


def _jacobi_rule(n, a, b):
    """Nodes/weights integrating g against the beta(a,b) density on [0,1]."""
    key = (n, a, b)
    if key not in _jacobi_cache:
        x, w = roots_jacobi(n, b - 1.0, a - 1.0)
        u = 0.5 * (1.0 + x)
        logc = (1.0 - a - b) * math.log(2.0) - betaln(a, b)
        _jacobi_cache[key] = (u, w * math.exp(logc))
    return _jacobi_cache[key]


def quadrature_tilted_moments(dist, theta, start_nodes=64, max_nodes=4096):
    """Tilted moments of a beta/uniform kind by adaptive Gauss-Jacobi.

    Doubles the node count until successive log-moment estimates agree to
    1e-12.  Verification path for the closed forms; raises QuadratureFailure
    if the budget is exhausted.
    """
    if isinstance(dist, Uniform01):
        a, b = 1.0, 1.0
    elif isinstance(dist, Beta):
        a, b = dist.a, dist.b
    else:
        raise QuadratureFailure(
            f"quadrature path only applies to density kinds, not {dist.spec_string()}"
        )
    theta = np.atleast_1d(_check_theta(theta)).astype(float)
    xhat = np.where(theta > 0.0, 1.0, 0.0)

    def moments(n):
        u, w = _jacobi_rule(n, a, b)
        e = np.exp(theta[:, None] * (u[None, :] - xhat[:, None]))
        return np.stack([e @ (w * u ** k) for k in range(4)])

    nodes = start_nodes
    prev = moments(nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = moments(nodes)
        if np.max(np.abs(np.log(cur) - np.log(prev))) < 1e-12:
            return (xhat, cur[0], cur[1], cur[2], cur[3])
        prev = cur
    raise QuadratureFailure(
        f"tilted moments did not converge within {max_nodes} nodes"
    )


@dataclass(frozen=True)
class Beta(EdgeWeightDistribution):
    """Beta(a, b) edge weights.

    Tilted moments use the confluent hypergeometric identity

        E[X^k e^{theta X}] = (a)_k / (a+b)_k * 1F1(a + k; a + b + k; theta),

    which is fast, vectorized, and accurate over the whole guarded range;
    `quadrature_tilted_moments` provides the independent cross-check.
    """

    a: float
    b: float
    quadrature_nodes: int = 64
    symmetric: bool = field(init=False)

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0 and math.isfinite(self.a + self.b)):
            raise DegenerateDistribution("beta shapes must be positive finite")
        if self.quadrature_nodes < 1:
            raise DegenerateDistribution("quadrature_nodes must be positive")
        object.__setattr__(self, "symmetric", self.a == self.b)
        self._verify_symmetry()

    def _tilted_moments(self, theta):
        xhat = np.where(theta > 0.0, 1.0, 0.0)
        damp = np.exp(-theta * xhat)
        n = []
        for k in range(4):
            c = poch(self.a, k) / poch(self.a + self.b, k)
            n.append(c * hyp1f1(self.a + k, self.a + self.b + k, theta) * damp)
        if not np.all(np.isfinite(n[0])):
            raise OverflowGuard("beta tilted moments overflowed")
        return (xhat, n[0], n[1], n[2], n[3])

    def mean(self):
        return self.a / (self.a + self.b)

    def var(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1.0))

    def sample(self, rng, size=None):
        x = rng.beta(self.a, self.b, size)
        return float(x) if size is None else x

    def spec_string(self):
        return f"beta:a={self.a:g},b={self.b:g}"


# ---------------------------------------------------------------------------
# spec operations
# ---------------------------------------------------------------------------


def cumulant(dist: EdgeWeightDistribution, theta: float) -> float:
    """K(theta) = log E[exp(theta X)]."""
    return float(dist.log_mgf(float(theta)))


def cumulant_derivatives(dist: EdgeWeightDistribution, theta: float) -> CumulantDerivatives:
    """K and its first three derivatives at a single tilt."""
    k0, k1, k2, k3 = dist.cumulants(float(theta))
    return CumulantDerivatives(k0, k1, k2, k3)


def sample_weight(dist: EdgeWeightDistribution, rng: np.random.Generator) -> float:
    """One draw from mu; deterministic given the rng state."""
    return float(dist.sample(rng))


def curvature_balance(dist: EdgeWeightDistribution, p: int, theta):
    """h(theta) = K'''(theta) K'(theta) + (p - 2) K''(theta)^2, vectorized.

    The phase analysis requires h to have exactly one zero; its sign change
    locates the dual of the inflection-balance point.
    """
    _, k1, k2, k3 = dist.cumulants(theta)
    return k3 * k1 + (p - 2) * k2 * k2


def _refine_zero(fn, lo, hi, flo, fhi, tol=1e-13, max_iter=200):
    """Bisect a bracketed sign change of fn down to width tol."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (flo < 0.0) != (fm < 0.0):
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def assumption_zeros(
    dist: EdgeWeightDistribution,
    p: int,
    theta_lo: float,
    theta_hi: float,
    grid: int,
):
    """Refined zeros of the curvature balance h on [theta_lo, theta_hi]."""
    if not theta_lo < theta_hi:
        raise ValueError("need theta_lo < theta_hi")
    if grid < 100:
        raise ValueError("grid must be >= 100")
    if p < 2:
        raise ValueError("p must be >= 2")
    thetas = np.linspace(theta_lo, theta_hi, grid)
    h = curvature_balance(dist, p, thetas)

    def h_scalar(t):
        return float(curvature_balance(dist, p, float(t)))

    zeros = []
    i = 0
    while i < len(thetas) - 1:
        a, b = h[i], h[i + 1]
        if a == 0.0:
            # exact hit on a grid node: a crossing iff neighbours flip sign
            left = h[i - 1] if i > 0 else None
            if left is not None and b != 0.0 and (left < 0.0) != (b < 0.0):
                zeros.append(float(thetas[i]))
            i += 1
            continue
        if (a < 0.0) != (b < 0.0) and b != 0.0:
            zeros.append(
                _refine_zero(h_scalar, float(thetas[i]), float(thetas[i + 1]), a, b)
            )
        i += 1
    return zeros


def assumption_zero_count(
    dist: EdgeWeightDistribution,
    p: int,
    theta_lo: float,
    theta_hi: float,
    grid: int,
) -> int:
    """Number of sign changes of the curvature balance on the given range."""
    return len(assumption_zeros(dist, p, theta_lo, theta_hi, grid))


# ---------------------------------------------------------------------------
# spec-string parsing
# ---------------------------------------------------------------------------

_KEYVAL = re.compile(r"^([^=]+)=([^=]+)$")


def _parse_kv(body: str, what: str) -> dict:
    pairs = {}
    for part in body.split(","):
        m = _KEYVAL.match(part.strip())
        if m is None:
            raise ValueError(f"bad {what} parameter {part!r}; expected key=value")
        key = m.group(1).strip()
        try:
            val = float(m.group(2))
        except ValueError:
            raise ValueError(f"bad {what} value in {part!r}") from None
        if key in pairs:
            raise ValueError(f"duplicate {what} key {key!r}")
        pairs[key] = val
    return pairs


def parse_distribution(spec: str) -> EdgeWeightDistribution:
    """Parse a distribution spec string.

    Accepted forms: `bernoulli:q=0.5`, `uniform`, `beta:a=2,b=2`,
    `discrete:0=0.5,1=0.5` (atom=probability pairs).  Unknown keys are
    errors.
    """
    spec = spec.strip()
    kind, _, body = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "uniform":
        if body:
            raise ValueError("uniform takes no parameters")
        return Uniform01()
    if kind == "bernoulli":
        kv = _parse_kv(body, "bernoulli")
        if set(kv) != {"q"}:
            raise ValueError(f"bernoulli takes exactly q=..., got {sorted(kv)}")
        return Bernoulli(kv["q"])
    if kind == "beta":
        kv = _parse_kv(body, "beta")
        if set(kv) != {"a", "b"}:
            raise ValueError(f"beta takes exactly a=...,b=..., got {sorted(kv)}")
        return Beta(kv["a"], kv["b"])
    if kind == "discrete":
        kv = _parse_kv(body, "discrete")
        atoms = tuple(sorted((float(x), p) for x, p in kv.items()))
        return Discrete(atoms)
    raise ValueError(f"unknown distribution kind {kind!r}")
