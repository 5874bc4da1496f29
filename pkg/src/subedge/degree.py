"""Average-degree estimation through the query oracle.

Two modes share one result type:

``exact``
    Queries every degree. n queries, no error. Used by the test harness to
    separate sampler error from estimator error.

``sublinear``
    Degree-bucketing estimator. Sampled vertices are grouped into geometric
    degree buckets; buckets hit often enough count as *large*. Each sampled
    vertex in a large bucket contributes its degree, plus its degree again if
    a random neighbor lands in a small bucket. This charges every edge
    touching a small bucket to its large endpoint, so the estimate is
    unbiased up to the (few) edges with both ends in small buckets. The
    median of independent group means is then deflated by ``1 + eps/3`` so
    the two-sided error becomes the one-sided band ``[(1-eps) d, d]``.

    The required sample size scales with ``sqrt(n / d_avg)``, which is not
    known up front. A cheap pilot search with power-of-two buckets walks a
    guess down from ``n - 1`` until a pilot mean supports it; the main run
    is then sized for that guess.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import check_rng
from ._validation import check_delta, check_eps
from .exceptions import EmptyGraphError, EstimatorBudgetExceeded

__all__ = [
    "DegreeEstimate",
    "estimate_avg_degree_exact",
    "estimate_avg_degree_sublinear",
    "ExactDegreeEstimator",
    "SublinearDegreeEstimator",
]

# Vertices per group at guess d: ceil(SAMPLE_CONSTANT * sqrt(n / d) / eps^2).
SAMPLE_CONSTANT = 4.0
# Vertices per pilot round at guess d: ceil(PILOT_CONSTANT * sqrt(n / d)).
PILOT_CONSTANT = 8.0
BUDGET_PER_VERTEX = 64


@dataclass(frozen=True)
class DegreeEstimate:
    d_avg: float
    queries_used: int
    mode: str

    def __post_init__(self):
        if not self.d_avg > 0:
            raise ValueError(f"average-degree estimate must be positive, got {self.d_avg}")


def estimate_avg_degree_exact(oracle):
    """``m / n`` from n degree queries."""
    before = oracle.total_queries
    degs = oracle.degrees(np.arange(oracle.n, dtype=np.int64))
    m = int(degs.sum())
    if m == 0:
        raise EmptyGraphError("graph has no edges; average degree is 0")
    return DegreeEstimate(m / oracle.n, oracle.total_queries - before, "exact")


def _bucket_of(deg, log_base):
    # bucket i holds degrees in ((1+beta)^(i-1), (1+beta)^i]; degree-0 vertices get -1
    out = np.full(deg.shape, -1, dtype=np.int64)
    pos = deg > 0
    out[pos] = np.ceil(np.log(deg[pos]) / log_base - 1e-12).astype(np.int64)
    return out


def _group_mean(oracle, rng, k, log_base, min_hits, eps, guess):
    """One group of ``k`` sampled vertices; returns the bucketed mean."""
    n = oracle.n
    us = oracle.uniform_vertices(k)
    du = oracle.degrees(us)
    bu = _bucket_of(du, log_base)
    ids, hits = np.unique(bu[bu >= 0], return_counts=True)
    n_buckets = max(len(ids), 1)
    # a bucket is large when its sampled share suggests at least
    # sqrt(eps * n * guess / 6) / n_buckets members; never fewer than min_hits hits
    threshold = max(min_hits, k * math.sqrt(eps * n * guess / 6.0) / (n_buckets * n))
    large_ids = ids[hits >= threshold]
    large = np.isin(bu, large_ids)
    if not large.any():
        return 0.0
    vs = us[large]
    dv = du[large]
    nbr = oracle.neighbors(vs, rng.integers(dv))
    dn = oracle.degrees(nbr)
    to_small = ~np.isin(_bucket_of(dn, log_base), large_ids)
    return float((dv * (1 + to_small)).sum()) / k


def estimate_avg_degree_sublinear(oracle, eps=0.25, delta=0.1, random_state=None, *, budget=None):
    """Estimate ``d_avg`` so that, w.p. >= 1 - delta, it lies in ``[(1-eps) d_avg, d_avg]``.

    Raises :class:`EstimatorBudgetExceeded` after ``budget`` queries
    (default ``64 n``); this is also how an edgeless graph is reported.
    """
    eps = check_eps(eps)
    delta = check_delta(delta)
    rng = check_rng(random_state, "estimator")
    n = oracle.n
    if n < 2:
        raise EmptyGraphError("a graph with fewer than two vertices has no edges")
    budget = BUDGET_PER_VERTEX * n if budget is None else int(budget)
    start = oracle.total_queries

    def reserve(k):
        # worst case per sampled vertex: uniform + degree + neighbor + degree
        if oracle.total_queries - start + 4 * k > budget:
            raise EstimatorBudgetExceeded(
                f"sublinear estimator would exceed its {budget}-query budget "
                f"(current guess d_avg={guess:.4g}); the graph may have no edges"
            )

    # pilot search with power-of-two buckets: locate the scale of d_avg
    coarse = math.log(2.0)
    guess = float(n - 1)
    while True:
        k = math.ceil(PILOT_CONSTANT * math.sqrt(n / guess))
        reserve(k)
        pilot = _group_mean(oracle, rng, k, coarse, 2, eps, guess)
        if pilot >= guess / 2:
            break
        guess = guess / 2 if pilot <= 0 else min(guess / 2, pilot)
        if guess < 1.0 / n:  # any graph with an edge has d_avg >= 2/n
            raise EstimatorBudgetExceeded("average-degree search fell below 1/n; the graph has no edges")

    target = pilot
    groups = 2 * math.ceil(math.log(1.0 / delta)) + 1
    k = math.ceil(SAMPLE_CONSTANT * math.sqrt(n / target) / eps**2)
    reserve(k * groups)
    fine = math.log1p(eps / 8.0)
    means = [_group_mean(oracle, rng, k, fine, 2, eps, target) for _ in range(groups)]
    est = float(np.median(means))
    if est <= 0:
        raise EstimatorBudgetExceeded("estimate collapsed to zero; the graph may have no edges")
    return DegreeEstimate(est / (1 + eps / 3), oracle.total_queries - start, "sublinear")


class ExactDegreeEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate_avg_degree_exact`."""

    def fit(self, X, y=None):
        self.estimate_ = estimate_avg_degree_exact(X)
        self.d_avg_ = self.estimate_.d_avg
        return self

    def __call__(self, oracle, rng=None):
        return estimate_avg_degree_exact(oracle)


class SublinearDegreeEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate_avg_degree_sublinear`.

    Parameters
    ----------
    eps : float in (0, 1/2)
    delta : float in (0, 1)
    budget : int, optional
        Hard query cap; defaults to ``64 n``.
    random_state : int, Generator or None
    """

    def __init__(self, eps=0.25, delta=0.1, budget=None, random_state=None):
        self.eps = eps
        self.delta = delta
        self.budget = budget
        self.random_state = random_state

    def fit(self, X, y=None):
        self.estimate_ = estimate_avg_degree_sublinear(
            X, self.eps, self.delta, self.random_state, budget=self.budget
        )
        self.d_avg_ = self.estimate_.d_avg
        return self

    def __call__(self, oracle, rng=None):
        rs = self.random_state if rng is None else rng
        return estimate_avg_degree_sublinear(oracle, self.eps, self.delta, rs, budget=self.budget)

    @property
    def queries_used_(self):
        check_is_fitted(self, "estimate_")
        return self.estimate_.queries_used
