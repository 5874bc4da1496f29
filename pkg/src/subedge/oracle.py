"""Metered access to a graph in the adjacency-list query model.

Three query types are supported: a uniformly random vertex, the degree of a
vertex, and the i-th neighbor of a vertex. Every call is counted. Batch
variants take arrays and count one query per element, so vectorized
callers are metered exactly like a loop of scalar calls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import check_rng

__all__ = ["QueryCounts", "QueryOracle", "ABSENT"]

#: Batch neighbor queries return this id where the scalar call returns ``None``.
ABSENT = -1


@dataclass(frozen=True)
class QueryCounts:
    uniform_vertex: int = 0
    degree: int = 0
    neighbor: int = 0

    @property
    def total(self):
        return self.uniform_vertex + self.degree + self.neighbor

    def __sub__(self, other):
        return QueryCounts(
            self.uniform_vertex - other.uniform_vertex,
            self.degree - other.degree,
            self.neighbor - other.neighbor,
        )

    def __add__(self, other):
        return QueryCounts(
            self.uniform_vertex + other.uniform_vertex,
            self.degree + other.degree,
            self.neighbor + other.neighbor,
        )

    def as_dict(self):
        return {
            "uniform_vertex": self.uniform_vertex,
            "degree": self.degree,
            "neighbor": self.neighbor,
            "total": self.total,
        }


class QueryOracle:
    """Query interface over a :class:`~subedge.graph.Graph`.

    One oracle per worker; the graph itself may be shared. ``random_state``
    seeds the uniform-vertex draws only.
    """

    def __init__(self, graph, random_state=None):
        self._graph = graph
        self._degrees = graph.degrees
        self._indptr = graph.indptr
        self._indices = graph.indices
        self._rng = check_rng(random_state, "oracle")
        self._n_uniform = 0
        self._n_degree = 0
        self._n_neighbor = 0

    @property
    def n(self):
        """Vertex count, known to the algorithm in this model."""
        return self._graph.n

    @property
    def counts(self):
        return QueryCounts(self._n_uniform, self._n_degree, self._n_neighbor)

    @property
    def total_queries(self):
        return self._n_uniform + self._n_degree + self._n_neighbor

    def _check_vertex(self, v):
        if not 0 <= v < self._graph.n:
            raise IndexError(f"vertex {v} out of range [0, {self._graph.n})")

    def _check_vertices(self, vs):
        if vs.size and (vs.min() < 0 or vs.max() >= self._graph.n):
            raise IndexError(f"vertex ids out of range [0, {self._graph.n})")

    # -- scalar queries ---------------------------------------------------------

    def uniform_vertex(self):
        self._n_uniform += 1
        return int(self._rng.integers(self._graph.n))

    def degree(self, v):
        v = int(v)
        self._check_vertex(v)
        self._n_degree += 1
        return int(self._degrees[v])

    def neighbor(self, v, i):
        """The i-th neighbor of v, or None when i is not below deg(v)."""
        v, i = int(v), int(i)
        self._check_vertex(v)
        self._n_neighbor += 1
        if 0 <= i < self._degrees[v]:
            return int(self._indices[self._indptr[v] + i])
        return None

    # -- batch queries ----------------------------------------------------------

    def uniform_vertices(self, size):
        size = int(size)
        self._n_uniform += size
        return self._rng.integers(self._graph.n, size=size)

    def degrees(self, vs):
        vs = np.asarray(vs, dtype=np.int64)
        self._check_vertices(vs)
        self._n_degree += vs.size
        return self._degrees[vs]

    def neighbors(self, vs, idx):
        """Vectorized :meth:`neighbor`; absent entries come back as ``ABSENT``."""
        vs = np.asarray(vs, dtype=np.int64)
        idx = np.asarray(idx, dtype=np.int64)
        self._check_vertices(vs)
        self._n_neighbor += vs.size
        deg = self._degrees[vs]
        ok = (idx >= 0) & (idx < deg)
        out = np.full(vs.shape, ABSENT, dtype=np.int64)
        out[ok] = self._indices[self._indptr[vs[ok]] + idx[ok]]
        return out
