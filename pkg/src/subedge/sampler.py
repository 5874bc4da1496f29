"""Amortized near-uniform edge sampling.

:func:`preprocess` draws a random vertex multiset ``S`` and builds an alias
table over it, weighted by degree. Afterwards every call to
:func:`sample_edge` costs O(x/eps) expected queries and returns an oriented
edge whose probability is within a factor ``1 +- 2 eps`` of ``1/m``.

Edges whose source has degree at most ``tau`` are *light*. A light edge is
found by picking a uniform vertex and a uniform neighbor, then accepting
with probability ``d(v) / (4 tau gamma)``. A heavy edge ``(u, w)`` is found
by walking two steps from a degree-weighted vertex of ``S`` and accepting
with probability ``eps / (4 x_bar)``. A fair coin picks the branch.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import check_rng, rng_stream
from ._validation import check_delta, check_eps, check_estimator_mode, check_tradeoff
from .alias import AliasTable, build_alias
from .degree import DegreeEstimate, estimate_avg_degree_exact, estimate_avg_degree_sublinear
from .distributions import EdgeDistribution
from .exceptions import (
    EmptyGraphError,
    IterationCapExceeded,
    PreprocessingFailure,
    StateMismatchError,
)
from .graph import Graph
from .oracle import QueryOracle

__all__ = [
    "Fail",
    "OrientedEdge",
    "SamplerConfig",
    "SamplerState",
    "preprocess",
    "repetitions",
    "multiset_size",
    "sample_light",
    "sample_heavy",
    "sample_edge",
    "sample_edges",
    "sample_light_batch",
    "sample_heavy_batch",
    "sample_edges_vectorized",
    "VectorizedDraw",
    "iteration_cap",
    "exact_distribution",
    "UniformEdgeSampler",
]

STATE_FORMAT = "subedge.sampler-state"
STATE_VERSION = 1
MASS_CONSTANT = 35.0
GAMMA_LOW, GAMMA_HIGH = 0.25, 12.0


class Fail(enum.Enum):
    LIGHT_REJECT = "light-reject"
    HEAVY_REJECT = "heavy-reject"
    WRONG_SIDE = "wrong-side"


# integer codes used by the batch procedures
OK = 0
_CODES = {1: Fail.LIGHT_REJECT, 2: Fail.HEAVY_REJECT, 3: Fail.WRONG_SIDE}
LIGHT_REJECT, HEAVY_REJECT, WRONG_SIDE = 1, 2, 3


class OrientedEdge(NamedTuple):
    source: int
    target: int


@dataclass(frozen=True)
class SamplerConfig:
    eps: float = 0.25
    delta: float = 0.1
    x: float = 1.0
    seed: int | None = None
    estimator: object = "exact"

    def __post_init__(self):
        check_eps(self.eps)
        check_delta(self.delta)
        check_tradeoff(self.x)
        check_estimator_mode(self.estimator)


def repetitions(delta):
    """Number of multisets ``t``: the least t with ``3**t >= 3/delta``."""
    delta = check_delta(delta)
    return max(1, math.ceil(math.log(3.0 / delta) / math.log(3.0) - 1e-9))


def clamp_tradeoff(x, n, d_est):
    """``min(x, sqrt(n / d_est))``, floored at 1.

    The floor only matters for an estimate above n, which no good estimate is.
    """
    return max(1.0, min(float(x), math.sqrt(n / d_est)))


def multiset_size(n, tau, eps, delta, t):
    """``s = (n / tau) * 35 ln(6 n t / delta) / eps^2``, rounded up."""
    return math.ceil((n / tau) * MASS_CONSTANT * math.log(6.0 * n * t / delta) / eps**2)


@dataclass(frozen=True, eq=False)
class SamplerState:
    """Everything the sampling procedures need; immutable after preprocessing.

    ``S`` is a multiset (one alias item per draw, repeats included) and
    ``S_degrees`` caches the degree of each entry.
    """

    n: int
    eps: float
    delta: float
    x: float
    x_bar: float
    tau: float
    gamma_bar: float
    d_avg_estimate: float
    t: int
    s: int
    S: np.ndarray
    S_degrees: np.ndarray
    m_S: int
    sets_drawn: int = 1
    estimator_mode: str = "exact"
    graph_checksum: str | None = None
    query_counts: dict | None = None
    alias: AliasTable = field(default=None, repr=False)

    def __post_init__(self):
        if self.alias is None:
            object.__setattr__(self, "alias", build_alias(self.S_degrees, items=np.arange(len(self.S))))

    @property
    def heavy_accept(self):
        return self.eps / (4.0 * self.x_bar)

    @property
    def max_iterations(self):
        return iteration_cap(self)

    def light_accept(self, d):
        return d / (self.tau * 4.0 * self.gamma_bar)

    def light_edge_probability(self):
        """Per-call probability that Sample-Light returns one fixed light edge."""
        return self.eps * self.s / (4.0 * self.n * self.x_bar * self.m_S)

    def validate(self, rel=1e-9):
        """Check the algebraic invariants tying the fields together."""
        problems = []
        if len(self.S) != self.s or len(self.S_degrees) != self.s:
            problems.append("len(S) != s")
        if int(np.sum(self.S_degrees, dtype=np.int64)) != self.m_S:
            problems.append("m_S != sum of cached degrees")
        if self.t != repetitions(self.delta):
            problems.append("t != ceil(log3(3/delta))")
        if not math.isclose(self.x_bar, clamp_tradeoff(self.x, self.n, self.d_avg_estimate), rel_tol=rel):
            problems.append("x_bar != min(x, sqrt(n / d_est))")
        if not math.isclose(self.tau, self.x_bar * self.d_avg_estimate / self.eps, rel_tol=rel):
            problems.append("tau != x_bar * d_est / eps")
        if not math.isclose(self.gamma_bar, self.m_S / (self.d_avg_estimate * self.s), rel_tol=rel):
            problems.append("gamma_bar != m_S / (d_est * s)")
        if not GAMMA_LOW <= self.gamma_bar <= GAMMA_HIGH:
            problems.append("gamma_bar outside [1/4, 12]")
        if problems:
            raise ValueError("invalid sampler state: " + "; ".join(problems))
        return self

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "format": STATE_FORMAT,
            "version": STATE_VERSION,
            "n": self.n,
            "graph_checksum": self.graph_checksum,
            "eps": self.eps,
            "delta": self.delta,
            "x": self.x,
            "x_bar": self.x_bar,
            "tau": self.tau,
            "gamma_bar": self.gamma_bar,
            "d_avg_estimate": self.d_avg_estimate,
            "estimator": self.estimator_mode,
            "t": self.t,
            "s": self.s,
            "sets_drawn": self.sets_drawn,
            "m_S": self.m_S,
            "S": self.S.tolist(),
            "S_degrees": self.S_degrees.tolist(),
            "query_counts": self.query_counts,
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != STATE_FORMAT:
            raise ValueError(f"not a sampler state document (format={doc.get('format')!r})")
        if doc.get("version") != STATE_VERSION:
            raise ValueError(f"unsupported sampler state version {doc.get('version')!r}")
        state = cls(
            n=int(doc["n"]),
            eps=float(doc["eps"]),
            delta=float(doc["delta"]),
            x=float(doc["x"]),
            x_bar=float(doc["x_bar"]),
            tau=float(doc["tau"]),
            gamma_bar=float(doc["gamma_bar"]),
            d_avg_estimate=float(doc["d_avg_estimate"]),
            t=int(doc["t"]),
            s=int(doc["s"]),
            S=np.asarray(doc["S"], dtype=np.int64),
            S_degrees=np.asarray(doc["S_degrees"], dtype=np.int64),
            m_S=int(doc["m_S"]),
            sets_drawn=int(doc.get("sets_drawn", 1)),
            estimator_mode=str(doc.get("estimator", "exact")),
            graph_checksum=doc.get("graph_checksum"),
            query_counts=doc.get("query_counts"),
        )
        return state.validate()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def check_graph(self, graph):
        """Raise StateMismatchError unless this state was built on ``graph``."""
        if graph.n != self.n:
            raise StateMismatchError(f"state is for n={self.n}, graph has n={graph.n}")
        if self.graph_checksum is not None and graph.checksum() != self.graph_checksum:
            raise StateMismatchError("graph checksum does not match the sampler state")
        if self.S.size and self.S.max() >= graph.n:
            raise StateMismatchError("state references vertices outside the graph")
        if not np.array_equal(graph.degrees[self.S], self.S_degrees):
            raise StateMismatchError("cached degrees of S disagree with the graph")


# -- preprocessing ------------------------------------------------------------


def _run_estimator(estimator, oracle, eps, delta, rng):
    if estimator == "exact":
        return estimate_avg_degree_exact(oracle)
    if estimator == "sublinear":
        # a third of the failure budget goes to the estimate
        return estimate_avg_degree_sublinear(oracle, eps, delta / 3.0, rng)
    result = estimator(oracle, rng)
    if isinstance(result, DegreeEstimate):
        return result
    return DegreeEstimate(float(result), 0, "custom")


def preprocess(oracle, config=None, random_state=None, *, graph_checksum=None, **kwargs):
    """Build a :class:`SamplerState`, or raise :class:`PreprocessingFailure`.

    Parameters
    ----------
    oracle : QueryOracle
    config : SamplerConfig, optional
        Built from ``kwargs`` (eps, delta, x, estimator, seed) when omitted.
    random_state : int, Generator or None
        Randomness for the degree estimator. Defaults to the ``estimator``
        stream of ``config.seed``.

    Multisets are drawn lazily: ``S_{i+1}`` is drawn only when ``S_i`` is
    rejected, so the degree-query cost is ``sets_drawn * s``.
    """
    if config is None:
        config = SamplerConfig(**kwargs)
    elif kwargs:
        raise TypeError("pass either a SamplerConfig or keyword parameters, not both")
    if random_state is None:
        random_state = rng_stream(config.seed, "estimator")
    rng = check_rng(random_state, "estimator")
    eps, delta, n = config.eps, config.delta, oracle.n

    start = oracle.counts
    est = _run_estimator(config.estimator, oracle, eps, delta, rng)
    d_est = est.d_avg
    x_bar = clamp_tradeoff(config.x, n, d_est)
    t = repetitions(delta)
    tau = x_bar * d_est / eps
    s = multiset_size(n, tau, eps, delta, t)

    ratios = []
    after_estimate = oracle.counts
    for i in range(1, t + 1):
        S = oracle.uniform_vertices(s)
        degs = oracle.degrees(S)
        m_S = int(degs.sum(dtype=np.int64))
        gamma = m_S / (d_est * s)
        if GAMMA_LOW <= gamma <= GAMMA_HIGH:
            return SamplerState(
                n=n, eps=eps, delta=delta, x=float(config.x), x_bar=x_bar, tau=tau,
                gamma_bar=gamma, d_avg_estimate=d_est, t=t, s=s, S=S, S_degrees=degs,
                m_S=m_S, sets_drawn=i,
                estimator_mode=est.mode, graph_checksum=graph_checksum,
                query_counts={
                    "estimator": (after_estimate - start).as_dict(),
                    "multisets": (oracle.counts - after_estimate).as_dict(),
                },
            )
        ratios.append(gamma)
    raise PreprocessingFailure(t, ratios)


# -- scalar sampling procedures -------------------------------------------------


def _uniform_neighbor(oracle, v, d, rng):
    return oracle.neighbor(v, int(rng.integers(d)))


def sample_light(oracle, state, rng):
    """One Sample-Light attempt: an OrientedEdge or a :class:`Fail` marker.

    At most three queries: uniform vertex, degree, neighbor.
    """
    v = oracle.uniform_vertex()
    d = oracle.degree(v)
    if d > state.tau:
        return Fail.WRONG_SIDE
    if d == 0:
        return Fail.LIGHT_REJECT
    u = _uniform_neighbor(oracle, v, d, rng)
    if rng.random() < state.light_accept(d):
        return OrientedEdge(v, u)
    return Fail.LIGHT_REJECT


def sample_heavy(oracle, state, rng):
    """One Sample-Heavy attempt: an OrientedEdge or a :class:`Fail` marker.

    At most three queries: neighbor, degree, neighbor. The degree of the
    starting vertex comes from the cache built during preprocessing.
    """
    pos = state.alias.sample_index(rng)
    v, dv = int(state.S[pos]), int(state.S_degrees[pos])
    u = _uniform_neighbor(oracle, v, dv, rng)
    du = oracle.degree(u)
    if du <= state.tau:
        return Fail.WRONG_SIDE
    w = _uniform_neighbor(oracle, u, du, rng)
    if rng.random() < state.heavy_accept:
        return OrientedEdge(u, w)
    return Fail.HEAVY_REJECT


def iteration_cap(state):
    """Safety cap on rejection-loop iterations: ``ceil(64 * 192 x_bar / eps)``."""
    return math.ceil((192.0 * state.x_bar / state.eps) * 64)


def _sample_edge_counted(oracle, state, rng, cap):
    for it in range(1, cap + 1):
        if rng.random() < 0.5:
            out = sample_light(oracle, state, rng)
        else:
            out = sample_heavy(oracle, state, rng)
        if isinstance(out, OrientedEdge):
            return out, it
    raise IterationCapExceeded(
        f"no edge returned after {cap} iterations; the sampler state is likely bad"
    )


def sample_edge(oracle, state, rng, *, max_iterations=None):
    """Loop fair-coin Sample-Light / Sample-Heavy until one returns an edge."""
    cap = iteration_cap(state) if max_iterations is None else int(max_iterations)
    return _sample_edge_counted(oracle, state, rng, cap)[0]


def sample_edges(oracle, state, rng, num_samples):
    """``num_samples`` calls to :func:`sample_edge`.

    Returns ``(edges, iterations)``: an int array of shape (q, 2) and the
    total number of loop iterations. Query metering is exact per call.
    """
    cap = iteration_cap(state)
    out = np.empty((int(num_samples), 2), dtype=np.int64)
    total = 0
    for j in range(int(num_samples)):
        edge, it = _sample_edge_counted(oracle, state, rng, cap)
        out[j] = edge
        total += it
    return out, total


# -- vectorized sampling procedures ---------------------------------------------


@dataclass
class BatchOutcome:
    """Results of ``size`` independent attempts.

    ``code`` is 0 for a returned edge, else 1 (light-reject), 2
    (heavy-reject) or 3 (wrong-side). ``edge_id`` is the CSR position of the
    returned edge and -1 on failure. ``queries`` is the per-attempt query
    count.
    """

    source: np.ndarray
    target: np.ndarray
    edge_id: np.ndarray
    code: np.ndarray
    queries: np.ndarray

    def __len__(self):
        return len(self.code)

    def outcome(self, i):
        if self.code[i] == OK:
            return OrientedEdge(int(self.source[i]), int(self.target[i]))
        return _CODES[int(self.code[i])]


def _empty_outcome(size):
    return BatchOutcome(
        source=np.full(size, -1, dtype=np.int64),
        target=np.full(size, -1, dtype=np.int64),
        edge_id=np.full(size, -1, dtype=np.int64),
        code=np.zeros(size, dtype=np.int8),
        queries=np.zeros(size, dtype=np.int8),
    )


def sample_light_batch(oracle, state, rng, size):
    """``size`` independent Sample-Light attempts, metered one query per element."""
    res = _empty_outcome(size)
    v = oracle.uniform_vertices(size)
    d = oracle.degrees(v)
    res.queries[:] = 2
    wrong = d > state.tau
    res.code[wrong] = WRONG_SIDE
    res.code[(~wrong) & (d == 0)] = LIGHT_REJECT
    go = np.flatnonzero((~wrong) & (d > 0))
    idx = rng.integers(d[go])
    u = oracle.neighbors(v[go], idx)
    res.queries[go] += 1
    accept = rng.random(go.size) < d[go] / (state.tau * 4.0 * state.gamma_bar)
    ok, rej = go[accept], go[~accept]
    res.code[rej] = LIGHT_REJECT
    res.source[ok], res.target[ok] = v[ok], u[accept]
    res.edge_id[ok] = oracle._indptr[v[ok]] + idx[accept]
    return res


def sample_heavy_batch(oracle, state, rng, size):
    """``size`` independent Sample-Heavy attempts, metered one query per element."""
    res = _empty_outcome(size)
    pos = state.alias.sample_index(rng, size)
    v, dv = state.S[pos], state.S_degrees[pos]
    u = oracle.neighbors(v, rng.integers(dv))
    du = oracle.degrees(u)
    res.queries[:] = 2
    wrong = du <= state.tau
    res.code[wrong] = WRONG_SIDE
    go = np.flatnonzero(~wrong)
    idx = rng.integers(du[go])
    w = oracle.neighbors(u[go], idx)
    res.queries[go] += 1
    accept = rng.random(go.size) < state.heavy_accept
    ok, rej = go[accept], go[~accept]
    res.code[rej] = HEAVY_REJECT
    res.source[ok], res.target[ok] = u[ok], w[accept]
    res.edge_id[ok] = oracle._indptr[u[ok]] + idx[accept]
    return res


class VectorizedDraw(NamedTuple):
    edge_ids: np.ndarray
    iterations: int
    iterations_used: int


def sample_edges_vectorized(oracle, state, rng, num_samples, *, block=1 << 20):
    """Vectorized equivalent of :func:`sample_edges`, returning CSR edge ids.

    Iterations are simulated in blocks. The distribution of returned edges
    is identical to the scalar loop, but the final block may run past the
    last needed success. Those extra iterations really issued queries, so
    they are metered and counted in ``iterations``; ``iterations_used``
    stops at the last needed success and is what the scalar loop would
    have reported.
    """
    q = int(num_samples)
    ids = np.empty(q, dtype=np.int64)
    filled = 0
    iterations = 0
    used = 0
    # success rate is at least eps / (192 x_bar); start from a mild guess and adapt
    rate = max(state.eps / (8.0 * state.x_bar * max(state.gamma_bar, 1.0)), 1e-6)
    while filled < q:
        need = q - filled
        size = int(min(block, max(1024, math.ceil(1.2 * need / rate))))
        if iterations + size > iteration_cap(state) * q:
            raise IterationCapExceeded("vectorized sampler exceeded its iteration cap")
        light = rng.random(size) < 0.5
        codes = np.empty(size, dtype=np.int8)
        eid = np.empty(size, dtype=np.int64)
        li, hi = np.flatnonzero(light), np.flatnonzero(~light)
        lo = sample_light_batch(oracle, state, rng, li.size)
        ho = sample_heavy_batch(oracle, state, rng, hi.size)
        codes[li], eid[li] = lo.code, lo.edge_id
        codes[hi], eid[hi] = ho.code, ho.edge_id
        hits = np.flatnonzero(codes == OK)
        take = min(hits.size, need)
        ids[filled:filled + take] = eid[hits[:take]]
        filled += take
        used = iterations + (int(hits[take - 1]) + 1 if filled == q else size)
        iterations += size
        rate = max(filled / iterations, rate / 4)
    return VectorizedDraw(ids, iterations, used)


# -- exact output distribution (harness side) -----------------------------------


def multiset_neighbor_counts(graph, S):
    """``d_S(u)`` for every vertex u, counting repeated entries of S."""
    counts = np.bincount(np.asarray(S, dtype=np.int64), minlength=graph.n)
    src = np.repeat(np.arange(graph.n), graph.degrees)
    return np.bincount(src, weights=counts[graph.indices], minlength=graph.n)


def exact_distribution(graph, state):
    """Exact conditional output distribution of :func:`sample_edge` for ``state``.

    Reads the graph directly and never touches an oracle. Per call, a light
    edge ``(v, u)`` is returned with probability ``1/(n tau 4 gamma)`` and a
    heavy edge ``(u, w)`` with ``d_S(u) / (m(S) d(u)) * eps / (4 x_bar)``
    (each times 1/2 for the coin); the result is normalized.
    """
    deg = graph.degrees.astype(np.float64)
    src = np.repeat(np.arange(graph.n), graph.degrees)
    heavy_v = deg > state.tau
    per_vertex = np.where(
        heavy_v,
        np.divide(multiset_neighbor_counts(graph, state.S), state.m_S * np.maximum(deg, 1.0))
        * state.heavy_accept,
        1.0 / (graph.n * state.tau * 4.0 * state.gamma_bar),
    )
    mass = 0.5 * per_vertex[src]
    success = float(mass.sum())
    if success <= 0:
        raise EmptyGraphError("the state returns no edge with positive probability")
    return EdgeDistribution(graph.oriented_edges(), mass / success, kind="exact", success_probability=success)


# -- estimator API ----------------------------------------------------------------


class UniformEdgeSampler(BaseEstimator):
    """Amortized sampler of near-uniform oriented edges.

    ``fit`` runs preprocessing against a graph (or an existing
    :class:`QueryOracle`); ``sample`` then draws edges whose probabilities
    are within ``1 +- 2 eps`` of uniform, provided preprocessing succeeded.

    Parameters
    ----------
    eps : float in (0, 1/2)
        Approximation parameter.
    delta : float in (0, 1)
        Failure probability of preprocessing.
    x : float >= 1
        Trade-off: larger x means cheaper preprocessing, costlier samples.
    estimator : {'exact', 'sublinear'} or callable
        How to obtain the average-degree estimate.
    max_retries : int
        Extra preprocessing attempts (fresh randomness) after a failure.
    random_state : int, Generator or None

    Attributes
    ----------
    state_ : SamplerState
    oracle_ : QueryOracle
    preprocess_counts_ : QueryCounts
        Queries spent in ``fit``, estimator included.
    n_attempts_ : int
    """

    def __init__(self, eps=0.25, delta=0.1, x=1.0, estimator="exact", max_retries=0, random_state=None):
        self.eps = eps
        self.delta = delta
        self.x = x
        self.estimator = estimator
        self.max_retries = max_retries
        self.random_state = random_state

    def _streams(self):
        if isinstance(self.random_state, np.random.Generator):
            g = self.random_state
            return g, g, g
        return (
            rng_stream(self.random_state, "oracle"),
            rng_stream(self.random_state, "preprocessing"),
            rng_stream(self.random_state, "sampling"),
        )

    def fit(self, X, y=None):
        config = SamplerConfig(self.eps, self.delta, self.x, None, self.estimator)
        oracle_rng, pre_rng, sample_rng = self._streams()
        if isinstance(X, Graph):
            oracle = QueryOracle(X, oracle_rng)
            checksum = X.checksum()
        elif isinstance(X, QueryOracle):
            oracle, checksum = X, None
        else:
            raise TypeError(f"fit expects a Graph or QueryOracle, got {type(X).__name__}")
        if oracle.n < 1:
            raise EmptyGraphError("graph has no vertices")
        before = oracle.counts
        attempts = 0
        while True:
            attempts += 1
            try:
                state = preprocess(oracle, config, pre_rng, graph_checksum=checksum)
                break
            except PreprocessingFailure:
                if attempts > int(self.max_retries):
                    raise
        self.state_ = state
        self.oracle_ = oracle
        self.n_attempts_ = attempts
        self.preprocess_counts_ = oracle.counts - before
        self._rng = sample_rng
        return self

    def sample_edge(self):
        check_is_fitted(self, "state_")
        return sample_edge(self.oracle_, self.state_, self._rng)

    def sample(self, n_samples=1, *, vectorized=False):
        """Draw ``n_samples`` oriented edges as an (n_samples, 2) array."""
        check_is_fitted(self, "state_")
        if vectorized:
            ids, it, _ = sample_edges_vectorized(self.oracle_, self.state_, self._rng, n_samples)
            g = self.oracle_._graph
            src = np.searchsorted(g.indptr, ids, side="right") - 1
            edges = np.column_stack([src, g.indices[ids]])
        else:
            edges, it = sample_edges(self.oracle_, self.state_, self._rng, n_samples)
        self.last_iterations_ = it
        return edges
