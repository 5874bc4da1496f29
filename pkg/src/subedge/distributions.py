"""Probability maps over the oriented edges of a graph, and distances between them.

Edge ``i`` of an :class:`EdgeDistribution` is row ``i`` of
``Graph.oriented_edges()``, i.e. the CSR position of the edge.
"""
from __future__ import annotations

import numpy as np

__all__ = ["EdgeDistribution", "uniform_distribution", "empirical_from_ids", "pointwise_deviation", "tvd"]


class EdgeDistribution:
    """Mass per oriented edge.

    ``kind`` is ``"exact"`` (masses computed analytically) or ``"empirical"``
    (``counts / samples``).
    """

    def __init__(self, edges, mass, kind="exact", *, counts=None, samples=None, success_probability=None,
                 queries=None):
        self.edges = np.asarray(edges)
        self.mass = np.asarray(mass, dtype=np.float64)
        if self.mass.ndim != 1 or len(self.mass) != len(self.edges):
            raise ValueError("mass must have one entry per oriented edge")
        if (self.mass < 0).any():
            raise ValueError("masses must be non-negative")
        if kind not in ("exact", "empirical"):
            raise ValueError(f"unknown distribution kind {kind!r}")
        self.kind = kind
        self.counts = counts
        self.samples = samples
        self.success_probability = success_probability
        self.queries = queries

    def __len__(self):
        return len(self.mass)

    def __repr__(self):
        extra = f", samples={self.samples}" if self.kind == "empirical" else ""
        return f"EdgeDistribution(kind={self.kind!r}, edges={len(self)}{extra})"

    def as_dict(self):
        """``{(u, v): mass}``; convenient for small graphs and tests."""
        return {(int(u), int(v)): float(p) for (u, v), p in zip(self.edges, self.mass)}


def uniform_distribution(graph):
    m = graph.m
    return EdgeDistribution(graph.oriented_edges(), np.full(m, 1.0 / m), kind="exact")


def empirical_from_ids(graph, edge_ids, queries=None):
    """Empirical distribution from an array of CSR edge ids."""
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    if edge_ids.size == 0:
        raise ValueError("an empirical distribution needs at least one sample")
    counts = np.bincount(edge_ids, minlength=graph.m)
    return EdgeDistribution(
        graph.oriented_edges(), counts / edge_ids.size, kind="empirical",
        counts=counts, samples=int(edge_ids.size), queries=queries,
    )


def _check_same_universe(p, q):
    if len(p) != len(q):
        raise ValueError(f"distributions live on different edge sets ({len(p)} vs {len(q)} edges)")


def pointwise_deviation(p, q):
    """``max_e |P(e) - Q(e)| / Q(e)``; requires Q(e) > 0 on every edge."""
    _check_same_universe(p, q)
    if (q.mass <= 0).any():
        raise ValueError("reference distribution has zero mass on some edge")
    return float(np.max(np.abs(p.mass - q.mass) / q.mass))


def tvd(p, q):
    """Total variation distance, half the L1 distance."""
    _check_same_universe(p, q)
    return float(0.5 * np.abs(p.mass - q.mass).sum())
