"""Verification harness: good-set checks, distribution tests and scaling runs.

Functions here that take a :class:`~subedge.graph.Graph` read it directly
(brute force) and never touch a metered oracle. Everything that measures
the sampler goes through a :class:`~subedge.oracle.QueryOracle`.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ._rng import derive_seed, rng_stream
from .distributions import empirical_from_ids, pointwise_deviation, tvd, uniform_distribution
from .exceptions import EstimatorBudgetExceeded, PreprocessingFailure
from .oracle import QueryOracle
from .sampler import (
    GAMMA_HIGH,
    GAMMA_LOW,
    OK,
    SamplerConfig,
    exact_distribution,
    multiset_neighbor_counts,
    preprocess,
    sample_edges,
    sample_edges_vectorized,
    sample_heavy_batch,
    sample_light_batch,
)

__all__ = [
    "GoodSetReport",
    "check_good_set",
    "is_good_estimate",
    "binomial_allowance",
    "empirical_distribution",
    "edge_z_scores",
    "chi_square_pvalue",
    "measure_branch",
    "verify_run",
    "verify_summary",
    "tradeoff_for",
    "scaling_experiment",
    "REPORT_COLUMNS",
    "write_csv",
    "write_json",
]


@dataclass
class GoodSetReport:
    """Outcome of :func:`check_good_set`, condition by condition."""

    heavy_ok: bool
    mass_ok: bool
    num_heavy: int
    heavy_violations: list = field(default_factory=list)
    worst_heavy_ratio: float = 1.0
    mass_ratio: float = float("nan")
    estimate_mass_ok: bool | None = None

    @property
    def ok(self):
        return self.heavy_ok and self.mass_ok

    def __bool__(self):
        return self.ok

    def failed_conditions(self):
        out = []
        if not self.heavy_ok:
            out.append("heavy-concentration")
        if not self.mass_ok:
            out.append("mass-ratio")
        return out


def check_good_set(graph, S, eps, tau, d_avg_estimate=None):
    """Brute-force check of the two good-set conditions.

    1. every vertex with ``d(v) > tau`` has ``d_S(v)`` within
       ``(1 +- eps) |S| d(v) / n``;
    2. ``m(S)/|S|`` lies in ``[d_avg/4, 12 d_avg]`` for the true average degree.

    When ``d_avg_estimate`` is given, the same band around the estimate is
    reported as ``estimate_mass_ok`` (that is what preprocessing tests).
    """
    S = np.asarray(S, dtype=np.int64)
    size = len(S)
    if size == 0:
        raise ValueError("S must be non-empty")
    deg = graph.degrees
    n = graph.n
    heavy = np.flatnonzero(deg > tau)
    d_S = multiset_neighbor_counts(graph, S)[heavy]
    expected = size * deg[heavy].astype(np.float64)
    # compare d_S * n against (1 +- eps) |S| d(v) to keep the arithmetic exact-ish
    lo_ok = d_S * n >= (1.0 - eps) * expected
    hi_ok = d_S * n <= (1.0 + eps) * expected
    bad = heavy[~(lo_ok & hi_ok)]
    ratios = d_S * n / expected if heavy.size else np.ones(1)
    worst = float(ratios[np.argmax(np.abs(ratios - 1.0))])
    m_S = int(deg[S].sum(dtype=np.int64))
    ratio = m_S / size
    mass_ok = GAMMA_LOW * graph.d_avg <= ratio <= GAMMA_HIGH * graph.d_avg
    est_ok = None
    if d_avg_estimate is not None:
        est_ok = GAMMA_LOW * d_avg_estimate <= ratio <= GAMMA_HIGH * d_avg_estimate
    return GoodSetReport(
        heavy_ok=bad.size == 0,
        mass_ok=bool(mass_ok),
        num_heavy=int(heavy.size),
        heavy_violations=bad.tolist(),
        worst_heavy_ratio=worst,
        mass_ratio=ratio / graph.d_avg,
        estimate_mass_ok=est_ok,
    )


def is_good_estimate(d_avg_estimate, d_avg, eps):
    """``d_est`` in ``[(1 - eps) d_avg, d_avg]``."""
    return (1.0 - eps) * d_avg <= d_avg_estimate <= d_avg


def is_good_state(graph, state):
    """Good set, good estimate and gamma in range, all at the state's eps."""
    report = check_good_set(graph, state.S, state.eps, state.tau, state.d_avg_estimate)
    return (
        report.ok
        and is_good_estimate(state.d_avg_estimate, graph.d_avg, state.eps)
        and GAMMA_LOW <= state.gamma_bar <= GAMMA_HIGH
    )


def binomial_allowance(p, trials, sigmas=3.0):
    """Largest acceptable failure fraction: ``p + sigmas * sqrt(p (1-p) / trials)``."""
    return p + sigmas * math.sqrt(p * (1.0 - p) / trials)


# -- distribution measurements ------------------------------------------------------


def empirical_distribution(oracle, state, rng, num_samples, *, vectorized=True):
    """Empirical distribution of ``num_samples`` calls to the edge sampler.

    ``queries`` on the result is the number of oracle queries consumed,
    ``iterations`` the loop iterations performed and ``iterations_used``
    the iterations up to the last returned edge (equal in the scalar path).
    """
    q = int(num_samples)
    if q <= 0:
        raise ValueError("num_samples must be positive; an empty distribution is undefined")
    graph = oracle._graph
    before = oracle.total_queries
    if vectorized:
        ids, iterations, used = sample_edges_vectorized(oracle, state, rng, q)
    else:
        edges, iterations = sample_edges(oracle, state, rng, q)
        ids = np.array([graph.edge_id(u, v) for u, v in edges], dtype=np.int64)
        used = iterations
    dist = empirical_from_ids(graph, ids, queries=oracle.total_queries - before)
    dist.iterations = iterations
    dist.iterations_used = used
    return dist


def edge_z_scores(empirical, exact):
    """Per-edge binomial z-scores of empirical counts against exact masses."""
    q = empirical.samples
    p = exact.mass
    sd = np.sqrt(q * p * (1.0 - p))
    diff = empirical.counts - q * p
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, diff / sd, np.where(diff == 0, 0.0, np.inf))
    return z


def chi_square_pvalue(empirical, exact):
    """Pearson goodness-of-fit p-value of the empirical counts against ``exact``."""
    support = exact.mass > 0
    if (empirical.counts[~support] > 0).any():
        return 0.0
    expected = exact.mass[support] * empirical.samples
    return float(stats.chisquare(empirical.counts[support], expected).pvalue)


@dataclass
class BranchMeasurement:
    """Per-edge return counts of ``calls`` independent single-branch calls."""

    branch: str
    calls: int
    counts: np.ndarray
    max_queries: int
    queries: int
    metered_queries: int


def measure_branch(oracle, state, rng, calls, branch="light", *, block=1 << 21):
    """Run Sample-Light or Sample-Heavy ``calls`` times and tally returned edges."""
    fn = {"light": sample_light_batch, "heavy": sample_heavy_batch}[branch]
    graph = oracle._graph
    counts = np.zeros(graph.m, dtype=np.int64)
    max_q = 0
    total_q = 0
    before = oracle.total_queries
    done = 0
    while done < calls:
        size = min(block, calls - done)
        res = fn(oracle, state, rng, size)
        counts += np.bincount(res.edge_id[res.code == OK], minlength=graph.m)
        max_q = max(max_q, int(res.queries.max()))
        total_q += int(res.queries.sum(dtype=np.int64))
        done += size
    return BranchMeasurement(branch, int(calls), counts, max_q, total_q, oracle.total_queries - before)


def light_edge_mask(graph, state):
    src = np.repeat(np.arange(graph.n), graph.degrees)
    return graph.degrees[src] <= state.tau


def heavy_edge_probabilities(graph, state):
    """Per-call probability that Sample-Heavy returns each oriented edge (0 for light)."""
    deg = graph.degrees.astype(np.float64)
    src = np.repeat(np.arange(graph.n), graph.degrees)
    d_S = multiset_neighbor_counts(graph, state.S)
    p = d_S[src] / (state.m_S * deg[src]) * state.heavy_accept
    p[graph.degrees[src] <= state.tau] = 0.0
    return p


# -- verification runs -------------------------------------------------------------

REPORT_COLUMNS = [
    "graph", "seed", "n", "m", "eps", "delta", "x", "x_bar", "tau", "gamma_bar", "t", "s",
    "sets_drawn", "d_avg", "d_avg_estimate", "estimator", "preprocess_queries", "samples",
    "sample_queries", "mean_iterations", "iteration_bound", "pointwise_dev", "tvd",
    "empirical_max_z", "chi2_p", "preprocess_ok", "good_set", "good_estimate", "gamma_ok",
    "pointwise_ok", "iterations_ok", "failure",
]


def verify_run(graph, config, seed, *, num_samples=0, label="", vectorized=True):
    """One seeded preprocessing run plus optional sampling; returns a report row."""
    oracle = QueryOracle(graph, rng_stream(seed, "oracle"))
    row = dict.fromkeys(REPORT_COLUMNS, "")
    row.update(graph=label, seed=seed, n=graph.n, m=graph.m, eps=config.eps, delta=config.delta,
               x=config.x, d_avg=graph.d_avg, estimator=str(config.estimator))
    try:
        state = preprocess(oracle, config, rng_stream(seed, "estimator"))
    except (PreprocessingFailure, EstimatorBudgetExceeded) as exc:
        row.update(preprocess_ok=False, good_set=False, good_estimate=False, gamma_ok=False,
                   preprocess_queries=oracle.total_queries, failure=str(exc))
        return row
    pre_q = oracle.total_queries
    report = check_good_set(graph, state.S, state.eps, state.tau, state.d_avg_estimate)
    exact = exact_distribution(graph, state)
    dev = pointwise_deviation(exact, uniform_distribution(graph))
    good_est = is_good_estimate(state.d_avg_estimate, graph.d_avg, state.eps)
    row.update(
        x_bar=state.x_bar, tau=state.tau, gamma_bar=state.gamma_bar, t=state.t, s=state.s,
        sets_drawn=state.sets_drawn, d_avg_estimate=state.d_avg_estimate,
        preprocess_queries=pre_q, pointwise_dev=dev, tvd=tvd(exact, uniform_distribution(graph)),
        preprocess_ok=True, good_set=report.ok, good_estimate=good_est,
        gamma_ok=GAMMA_LOW <= state.gamma_bar <= GAMMA_HIGH,
        iteration_bound=192.0 * state.x_bar / state.eps,
    )
    # the closeness guarantee is conditional on a good state
    row["pointwise_ok"] = (dev <= 2 * state.eps) if (report.ok and good_est) else ""
    if num_samples:
        emp = empirical_distribution(oracle, state, rng_stream(seed, "sampling"), num_samples,
                                     vectorized=vectorized)
        mean_it = emp.iterations_used / num_samples
        z = edge_z_scores(emp, exact)
        row.update(samples=num_samples, sample_queries=emp.queries, mean_iterations=mean_it,
                   empirical_max_z=float(np.max(np.abs(z))), chi2_p=chi_square_pvalue(emp, exact),
                   iterations_ok=mean_it <= row["iteration_bound"])
    return row


def verify_summary(rows, delta):
    """Aggregate pass flags over a seed sweep."""
    runs = len(rows)
    good = [r for r in rows if r.get("good_set") is True and r.get("good_estimate") is True
            and r.get("gamma_ok") is True]
    bad_fraction = 1.0 - len(good) / runs if runs else 0.0
    allowance = binomial_allowance(delta, runs) if runs else 0.0
    checks = {
        "pointwise_within_2eps": all(r["pointwise_ok"] is True for r in good),
        "gamma_in_range": all(r["gamma_ok"] is True for r in rows if r.get("preprocess_ok")),
        "iterations_within_bound": all(r["iterations_ok"] is not False for r in rows),
        "reliability_within_delta": bad_fraction <= allowance,
    }
    return {
        "runs": runs,
        "good_runs": len(good),
        "non_good_fraction": bad_fraction,
        "allowed_fraction": allowance,
        "max_pointwise_dev_good": max((r["pointwise_dev"] for r in good), default=None),
        "checks": checks,
        "pass": all(checks.values()),
    }


# -- scaling experiment ---------------------------------------------------------------


def tradeoff_for(graph, q):
    """``x = (n / sqrt(m)) / sqrt(q)``, clamped to at least 1."""
    return max(1.0, graph.n / math.sqrt(graph.m) / math.sqrt(q))


def scaling_experiment(graph, eps, delta, q_grid, seeds, *, estimator="exact", label=""):
    """Total query cost of preprocessing plus q samples over a grid of q.

    For each q the trade-off is set to :func:`tradeoff_for`. Sampling uses
    the exact scalar loop so the counters are precise. Returns
    ``(rows, summary)``; the summary holds per-q medians, the ratio of
    medians across consecutive grid points and the correlation of total
    queries with ``sqrt(q)``.
    """
    q_grid = [int(q) for q in q_grid]
    # beyond n^2/m the trade-off is already clamped to 1; such rows are flagged
    limit = graph.n**2 / graph.m
    rows = []
    for q in q_grid:
        x = tradeoff_for(graph, q)
        config = SamplerConfig(eps, delta, x, None, estimator)
        for seed in seeds:
            oracle = QueryOracle(graph, rng_stream(seed, "oracle"))
            try:
                state = preprocess(oracle, config, rng_stream(seed, "estimator"))
            except (PreprocessingFailure, EstimatorBudgetExceeded):
                rows.append({"graph": label, "q": q, "seed": seed, "x": x, "q_above_limit": q > limit,
                             "preprocess_ok": False,
                             "preprocess_queries": oracle.total_queries, "sample_queries": "",
                             "total_queries": "", "mean_iterations": ""})
                continue
            pre_q = oracle.total_queries
            _, iterations = sample_edges(oracle, state, rng_stream(seed, "sampling"), q)
            rows.append({
                "graph": label, "q": q, "seed": seed, "x": x, "q_above_limit": q > limit,
                "x_bar": state.x_bar, "tau": state.tau,
                "s": state.s, "preprocess_ok": True, "preprocess_queries": pre_q,
                "sample_queries": oracle.total_queries - pre_q, "total_queries": oracle.total_queries,
                "mean_iterations": iterations / q,
            })
    medians = []
    for q in q_grid:
        tot = [r["total_queries"] for r in rows if r["q"] == q and r["preprocess_ok"]]
        medians.append(float(np.median(tot)) if tot else float("nan"))
    ratios = [b / a for a, b in zip(medians, medians[1:])]
    ok_rows = [r for r in rows if r["preprocess_ok"]]
    if len({r["q"] for r in ok_rows}) > 1:
        fit = stats.linregress([math.sqrt(r["q"]) for r in ok_rows], [r["total_queries"] for r in ok_rows])
        slope, intercept, corr = float(fit.slope), float(fit.intercept), float(fit.rvalue)
    else:
        slope = intercept = corr = float("nan")
    summary = {
        "graph": label, "n": graph.n, "m": graph.m, "eps": eps, "delta": delta,
        "q_grid": q_grid, "q_limit": limit, "median_total_queries": medians, "step_ratios": ratios,
        "sqrt_fit": {"slope": slope, "intercept": intercept, "correlation": corr},
    }
    return rows, summary


# -- report writers -----------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(rows, path_or_file, columns=None):
    """One row per run; no timestamps, so reruns are byte-identical."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else REPORT_COLUMNS
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in columns])
    finally:
        if own:
            fh.close()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def write_json(doc, path_or_file, *, timestamp=True):
    """JSON summary; the only timestamp lives in ``generated_at``."""
    doc = _jsonable(dict(doc))
    if timestamp:
        doc["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if isinstance(path_or_file, str):
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        path_or_file.write(text)


def sweep_seeds(base_seed, count):
    """``count`` child seeds of ``base_seed``."""
    return [derive_seed(base_seed, i) for i in range(int(count))]
