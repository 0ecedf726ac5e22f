"""Finite-size Monte Carlo for the edge-weighted exponential model.

The target law reweights iid edge weights by exp(n^2 (beta1 t1 + beta2 t2))
where t1, t2 are homomorphism densities of an edge and of the chosen
subgraph.  A single-edge Metropolis chain with independent proposals from
the base law is exact for it: the proposal density cancels against the
base measure, leaving acceptance min(1, exp(n^2 * delta)).

Homomorphism densities follow the graphon convention: the average runs
over ALL vertex maps (including non-injective ones) and the diagonal
carries weight zero, so e.g. the edge density of the all-ones graph is
(n-1)/n, not 1.  Density deltas for single-edge updates are exact local
formulas (O(1) for the two-star, one row dot product for the triangle),
with caches refreshed from scratch every `CACHE_REFRESH` steps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .distributions import Discrete, EdgeWeightDistribution
from .errors import TooLarge, UnsupportedSubgraph
from .variational import ModelParams

CACHE_REFRESH = 100_000

_GENERIC_MAX_VERTICES = 4


# ---------------------------------------------------------------------------
# subgraphs and graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubgraphSpec:
    """A small simple connected graph whose density is observed."""

    name: str
    k: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise UnsupportedSubgraph("loops are not allowed")
            if not (0 <= i < self.k and 0 <= j < self.k):
                raise UnsupportedSubgraph("edge endpoint outside vertex range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise UnsupportedSubgraph("multi-edges are not allowed")
            seen.add(key)
        if not self.edges:
            raise UnsupportedSubgraph("subgraph needs at least one edge")
        if not self._connected():
            raise UnsupportedSubgraph("subgraph must be connected")

    def _connected(self) -> bool:
        adj = {v: set() for v in range(self.k)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        seen, todo = set(), [0]
        while todo:
            v = todo.pop()
            if v in seen:
                continue
            seen.add(v)
            todo.extend(adj[v] - seen)
        return len(seen) == self.k

    @property
    def p(self) -> int:
        """Edge count."""
        return len(self.edges)


EDGE = SubgraphSpec("edge", 2, ((0, 1),))
TWO_STAR = SubgraphSpec("two_star", 3, ((0, 1), (1, 2)))
TRIANGLE = SubgraphSpec("triangle", 3, ((0, 1), (1, 2), (2, 0)))

_NAMED = {s.name: s for s in (EDGE, TWO_STAR, TRIANGLE)}

# subgraphs with O(n)-or-better single-edge density deltas
CHAIN_SUBGRAPHS = (TWO_STAR, TRIANGLE)


def subgraph_by_name(name: str) -> SubgraphSpec:
    try:
        return _NAMED[name.replace("-", "_")]
    except KeyError:
        raise UnsupportedSubgraph(
            f"unknown subgraph {name!r}; chain supports {sorted(_NAMED)}"
        ) from None


def generic_subgraph(k: int, edges) -> SubgraphSpec:
    if k > _GENERIC_MAX_VERTICES:
        raise UnsupportedSubgraph(
            f"generic densities support at most {_GENERIC_MAX_VERTICES} vertices"
        )
    return SubgraphSpec("generic", k, tuple((int(i), int(j)) for i, j in edges))


@dataclass
class WeightedGraph:
    """Symmetric weights in [0,1] with a zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 2:
            raise ValueError("weights must be a square matrix, n >= 2")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diagonal(w) != 0.0):
            raise ValueError("diagonal must be exactly zero")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def iid_graph(dist: EdgeWeightDistribution, n: int, rng: np.random.Generator) -> WeightedGraph:
    """Graph with iid edge weights from the base law."""
    w = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    draws = np.atleast_1d(dist.sample(rng, size=len(iu[0])))
    w[iu] = draws
    return WeightedGraph(w + w.T)


def hom_density(graph: WeightedGraph, spec: SubgraphSpec) -> float:
    """t(H, G): average over all vertex maps of the edge-weight product."""
    w = graph.weights
    n = graph.n
    if spec.name == "edge":
        return float(w.sum()) / n ** 2
    if spec.name == "two_star":
        s = w.sum(axis=1)
        return float(s @ s) / n ** 3
    if spec.name == "triangle":
        return float(np.einsum("ij,jk,ki->", w, w, w)) / n ** 3
    if spec.k > _GENERIC_MAX_VERTICES:
        raise UnsupportedSubgraph(
            f"generic densities support at most {_GENERIC_MAX_VERTICES} vertices"
        )
    letters = "abcd"
    sub = ",".join(letters[i] + letters[j] for i, j in spec.edges) + "->"
    return float(np.einsum(sub, *([w] * spec.p), optimize=True)) / n ** spec.k


# ---------------------------------------------------------------------------
# chain state and dynamics
# ---------------------------------------------------------------------------


@dataclass
class ChainState:
    """A chain's exclusive state: graph, cached densities, rng, step count."""

    graph: WeightedGraph
    h2: SubgraphSpec
    rng: np.random.Generator
    step: int = 0
    t1: float = field(init=False)
    t2: float = field(init=False)
    # internal caches
    _row_sums: np.ndarray = field(init=False, repr=False)
    _tr3: float = field(init=False, repr=False)
    _pair_i: np.ndarray = field(init=False, repr=False)
    _pair_j: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.h2 not in CHAIN_SUBGRAPHS:
            raise UnsupportedSubgraph(
                f"chain dynamics support {[s.name for s in CHAIN_SUBGRAPHS]}, "
                f"not {self.h2.name!r}"
            )
        n = self.graph.n
        iu = np.triu_indices(n, k=1)
        self._pair_i = iu[0].astype(np.intp)
        self._pair_j = iu[1].astype(np.intp)
        self.refresh_caches()

    @property
    def n_pairs(self) -> int:
        return len(self._pair_i)

    def refresh_caches(self):
        """Recompute densities and local sums from the weight matrix."""
        w = self.graph.weights
        n = self.graph.n
        self._row_sums = w.sum(axis=1)
        self.t1 = float(w.sum()) / n ** 2
        if self.h2.name == "triangle":
            self._tr3 = float(np.einsum("ij,jk,ki->", w, w, w))
            self.t2 = self._tr3 / n ** 3
        else:
            self._tr3 = 0.0
            self.t2 = float(self._row_sums @ self._row_sums) / n ** 3


def log_acceptance(state: ChainState, pair_idx: int, y: float,
                   beta1: float, beta2: float) -> float:
    """log of the Metropolis acceptance exponent n^2 * delta for a proposal."""
    i = int(state._pair_i[pair_idx])
    j = int(state._pair_j[pair_idx])
    w = state.graph.weights
    n = state.graph.n
    d = y - w[i, j]
    dt1 = 2.0 * d / (n * n)
    if state.h2.name == "two_star":
        s = state._row_sums
        dt2 = (2.0 * d * (s[i] + s[j]) + 2.0 * d * d) / n ** 3
    else:
        dt2 = 6.0 * d * float(w[i] @ w[j]) / n ** 3
    return n * n * (beta1 * dt1 + beta2 * dt2)


def _step_core(state: ChainState, pair_idx: int, y: float, log_u: float,
               beta1: float, beta2: float) -> bool:
    """Apply one proposal; shared by mh_step and the block runner."""
    i = int(state._pair_i[pair_idx])
    j = int(state._pair_j[pair_idx])
    w = state.graph.weights
    n = state.graph.n
    x = w[i, j]
    d = y - x
    n2 = n * n
    dt1 = 2.0 * d / n2
    if state.h2.name == "two_star":
        s = state._row_sums
        dt2 = (2.0 * d * (s[i] + s[j]) + 2.0 * d * d) / n ** 3
        dtr3 = 0.0
    else:
        # trace delta uses the pre-update matrix
        dtr3 = 6.0 * d * float(w[i] @ w[j])
        dt2 = dtr3 / n ** 3
    log_acc = n2 * (beta1 * dt1 + beta2 * dt2)
    state.step += 1
    accepted = log_u < log_acc
    if accepted:
        w[i, j] = y
        w[j, i] = y
        state._row_sums[i] += d
        state._row_sums[j] += d
        state.t1 += dt1
        state.t2 += dt2
        state._tr3 += dtr3
    if state.step % CACHE_REFRESH == 0:
        state.refresh_caches()
    return accepted


def mh_step(state: ChainState, dist: EdgeWeightDistribution, params: ModelParams) -> ChainState:
    """One Metropolis proposal on a uniformly chosen pair; mutates the state.

    Proposes an independent draw from the base law for the chosen edge and
    accepts with probability min(1, exp(n^2 * delta)).
    """
    if params.p != state.h2.p:
        raise ValueError(
            f"params.p={params.p} does not match subgraph edge count {state.h2.p}"
        )
    pair_idx = int(state.rng.integers(state.n_pairs))
    y = float(dist.sample(state.rng))
    u = state.rng.random()
    log_u = math.log(u) if u > 0.0 else -math.inf
    _step_core(state, pair_idx, y, log_u, params.beta1, params.beta2)
    return state


def sweep_steps(n: int) -> int:
    """Steps per sweep: one expected proposal per vertex pair (~n^2/2)."""
    return max(1, (n * n) // 2)


@dataclass
class ChainTrace:
    """Thinned observable trace plus the final chain state."""

    steps: np.ndarray
    t_edge: np.ndarray
    t_h2: np.ndarray
    final: ChainState


def run_chain(
    dist: EdgeWeightDistribution,
    params: ModelParams,
    h2: SubgraphSpec,
    n: int,
    steps: int,
    burn_in: int | None = None,
    thin: int | None = None,
    seed: int = 0,
) -> ChainTrace:
    """Run the single-edge chain and record thinned (t_edge, t_h2).

    `burn_in` and `thin` are in steps; defaults are 200 sweeps and one
    sweep.  The initial graph is iid from the base law.  Randomness is
    drawn in blocks for speed, so traces are deterministic per seed but
    follow a different stream than repeated `mh_step` calls.
    """
    if params.p != h2.p:
        raise ValueError(
            f"params.p={params.p} does not match subgraph edge count {h2.p}"
        )
    if burn_in is None:
        burn_in = 200 * sweep_steps(n)
    if thin is None:
        thin = sweep_steps(n)
    if thin < 1 or steps < 1 or burn_in < 0:
        raise ValueError("need steps >= 1, thin >= 1, burn_in >= 0")
    rng = np.random.default_rng(seed)
    state = ChainState(iid_graph(dist, n, rng), h2, rng)
    total = burn_in + steps
    rec_steps, rec_t1, rec_t2 = [], [], []
    block = 65_536
    done = 0
    b1, b2 = params.beta1, params.beta2
    while done < total:
        m = min(block, total - done)
        pair_idx = rng.integers(0, state.n_pairs, size=m)
        ys = np.atleast_1d(dist.sample(rng, size=m))
        log_us = np.log(np.maximum(rng.random(m), 5e-324))
        for t in range(m):
            _step_core(state, int(pair_idx[t]), float(ys[t]), float(log_us[t]), b1, b2)
            k = done + t + 1
            if k > burn_in and (k - burn_in) % thin == 0:
                rec_steps.append(k)
                rec_t1.append(state.t1)
                rec_t2.append(state.t2)
        done += m
    return ChainTrace(
        steps=np.array(rec_steps, dtype=np.intp),
        t_edge=np.array(rec_t1),
        t_h2=np.array(rec_t2),
        final=state,
    )


# ---------------------------------------------------------------------------
# exact enumeration at tiny sizes
# ---------------------------------------------------------------------------


def exact_small_model(
    dist: EdgeWeightDistribution,
    params: ModelParams,
    h2: SubgraphSpec,
    n: int,
):
    """Exact free energy and state probabilities by full enumeration.

    Only for discrete laws with at most 4 atoms and n <= 3 (at most 64
    weight configurations).  Ground truth for chain tests.
    """
    if not isinstance(dist, Discrete):
        raise TooLarge("exact enumeration requires a discrete edge-weight law")
    if not 2 <= n <= 3:
        raise TooLarge(f"exact enumeration supports n in {{2, 3}}, got {n}")
    if len(dist.atoms) > 4:
        raise TooLarge("exact enumeration supports at most 4 atoms")
    if params.p != h2.p:
        raise ValueError(
            f"params.p={params.p} does not match subgraph edge count {h2.p}"
        )
    xs = [x for x, _ in dist.atoms]
    log_ps = [math.log(p) if p > 0 else -math.inf for _, p in dist.atoms]
    pairs = list(itertools.combinations(range(n), 2))
    configs, log_weights = [], []
    for assignment in itertools.product(range(len(xs)), repeat=len(pairs)):
        w = np.zeros((n, n))
        for (i, j), a in zip(pairs, assignment):
            w[i, j] = w[j, i] = xs[a]
        g = WeightedGraph(w)
        t1 = hom_density(g, EDGE)
        t2 = hom_density(g, h2)
        lw = sum(log_ps[a] for a in assignment) + n * n * (
            params.beta1 * t1 + params.beta2 * t2
        )
        configs.append(tuple(xs[a] for a in assignment))
        log_weights.append(lw)
    log_weights = np.array(log_weights)
    log_z = float(logsumexp(log_weights))
    psi_n = log_z / (n * n)
    pmf = np.exp(log_weights - log_z)
    return psi_n, list(zip(configs, pmf.tolist()))
