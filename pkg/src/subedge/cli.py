"""``subedge`` command line.

Subcommands: gen, preprocess, sample, verify, scale. Exit codes are 0 on
success, 1 on an algorithmic failure (preprocessing failed, or a checked
criterion did not hold) and 2 on usage or I/O errors.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from . import __version__
from ._rng import rng_stream, seed_from_env
from .exceptions import (
    EmptyGraphError,
    EstimatorBudgetExceeded,
    GraphFormatError,
    GraphValidationError,
    IterationCapExceeded,
    PreprocessingFailure,
    StateMismatchError,
)
from .graph import format_graph, gen_graph, load_graph, save_graph
from .harness import (
    REPORT_COLUMNS,
    scaling_experiment,
    sweep_seeds,
    verify_run,
    verify_summary,
    write_csv,
    write_json,
)
from .oracle import QueryOracle
from .sampler import SamplerConfig, SamplerState, preprocess, sample_edges, sample_edges_vectorized

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# the scaling criterion: every 4x step in q multiplies the median cost by this much
SCALE_RATIO_BAND = (1.5, 2.8)

_GEN_FLAGS = [
    ("star", "N"),
    ("clique", "K"),
    ("lollipop", "K,PATH_LEN"),
    ("erdos-renyi", "N,P"),
    ("clique-plus-bipartite", "K,A,B"),
    ("circulant", "N,K"),
]


class UsageError(Exception):
    pass


def _add_graph_source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--graph", metavar="PATH", help="edge-list file")
    g.add_argument("--gen", metavar="SPEC", help="generator spec, e.g. lollipop:16,100")


def _add_config(p, x=True):
    p.add_argument("--eps", type=float, default=0.25, help="approximation parameter in (0, 1/2)")
    p.add_argument("--delta", type=float, default=0.1, help="failure probability in (0, 1)")
    if x:
        p.add_argument("--x", type=float, default=1.0, help="trade-off parameter, >= 1")
    p.add_argument("--estimator", choices=["exact", "sublinear"], default="exact")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $SUBEDGE_SEED)")


def build_parser():
    parser = argparse.ArgumentParser(prog="subedge", description="Amortized near-uniform edge sampling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a generated graph as an edge list")
    src = p.add_mutually_exclusive_group(required=True)
    for name, metavar in _GEN_FLAGS:
        src.add_argument(f"--{name}", metavar=metavar)
    src.add_argument("--gen", metavar="SPEC", help="generator spec, e.g. star:11")
    _add_seed(p)
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("preprocess", help="build and save a sampler state")
    _add_graph_source(p)
    _add_config(p)
    _add_seed(p)
    p.add_argument("--retries", type=int, default=0, help="extra attempts after a failure")
    p.add_argument("--out", required=True, help="where to write the state JSON")

    p = sub.add_parser("sample", help="draw edges using a saved state")
    _add_graph_source(p)
    p.add_argument("--state", required=True, help="state JSON from 'preprocess'")
    p.add_argument("--q", type=int, default=1, help="number of edges")
    _add_seed(p)
    p.add_argument("--fold", action="store_true", help="print unordered edges 'u v' with u <= v")
    p.add_argument("--vectorized", action="store_true", help="batch sampler (faster, same distribution)")
    p.add_argument("--format", choices=["edge-list", "json"], default="edge-list")
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("verify", help="seed sweep with distribution checks")
    _add_graph_source(p)
    _add_config(p)
    _add_seed(p)
    p.add_argument("--seeds", type=int, default=20, help="number of seeded runs")
    p.add_argument("--q", type=int, default=0, help="samples per run for the empirical check")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("scale", help="total query cost against the number of samples")
    _add_graph_source(p)
    _add_config(p, x=False)
    _add_seed(p)
    p.add_argument("--q", default="100,400,1600,6400", help="comma-separated grid of sample counts")
    p.add_argument("--seeds", type=int, default=5, help="runs per grid point")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", help="output path (default: stdout)")
    return parser


def _load_source(args, seed):
    if args.graph is not None:
        return load_graph(args.graph), args.graph
    try:
        return gen_graph(args.gen, seed), args.gen
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="\n")


def _config(args, seed):
    try:
        return SamplerConfig(args.eps, args.delta, getattr(args, "x", 1.0), seed, args.estimator)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args, seed):
    for name, _ in _GEN_FLAGS:
        value = getattr(args, name.replace("-", "_"))
        if value is not None:
            spec = f"{name.replace('-', '_')}:{value}"
            break
    else:
        spec = args.gen
    try:
        graph = gen_graph(spec, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out in (None, "-"):
        sys.stdout.write(format_graph(graph))
    else:
        save_graph(graph, args.out)
    return EXIT_OK


def cmd_preprocess(args, seed):
    graph, label = _load_source(args, seed)
    config = _config(args, seed)
    if args.retries < 0:
        raise UsageError("--retries must be non-negative")
    oracle = QueryOracle(graph, rng_stream(seed, "oracle"))
    est_rng = rng_stream(seed, "estimator")
    failures = []
    for attempt in range(args.retries + 1):
        try:
            state = preprocess(oracle, config, est_rng, graph_checksum=graph.checksum())
            break
        except (PreprocessingFailure, EstimatorBudgetExceeded) as exc:
            failures.append(str(exc))
    else:
        report = {"status": "fail", "graph": label, "attempts": len(failures), "causes": failures,
                  "queries": oracle.counts.as_dict()}
        print(json.dumps(report, sort_keys=True))
        print(f"preprocessing failed: {failures[-1]}", file=sys.stderr)
        return EXIT_FAIL
    state.save(args.out)
    report = {
        "status": "ok",
        "graph": label,
        "attempts": len(failures) + 1,
        "n": state.n,
        "eps": state.eps,
        "delta": state.delta,
        "x": state.x,
        "x_bar": state.x_bar,
        "tau": state.tau,
        "gamma_bar": state.gamma_bar,
        "d_avg_estimate": state.d_avg_estimate,
        "t": state.t,
        "s": state.s,
        "sets_drawn": state.sets_drawn,
        "query_counts": state.query_counts,
        "queries": oracle.counts.as_dict(),
        "state": args.out,
    }
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_sample(args, seed):
    graph, _ = _load_source(args, seed)
    state = SamplerState.load(args.state)
    state.check_graph(graph)
    if args.q < 1:
        raise UsageError("--q must be at least 1")
    oracle = QueryOracle(graph, rng_stream(seed, "oracle"))
    rng = rng_stream(seed, "sampling")
    if args.vectorized:
        ids, iterations, _ = sample_edges_vectorized(oracle, state, rng, args.q)
        src = np.searchsorted(graph.indptr, ids, side="right") - 1
        edges = np.column_stack([src, graph.indices[ids]])
    else:
        edges, iterations = sample_edges(oracle, state, rng, args.q)
    if args.fold:
        edges = np.sort(edges, axis=1)
    summary = {"samples": int(args.q), "iterations": int(iterations), "sample_queries": oracle.total_queries,
               "queries": oracle.counts.as_dict(), "folded": bool(args.fold)}
    with _open_out(args.out) as fh:
        if args.format == "json":
            json.dump({"edges": edges.tolist(), "summary": summary}, fh)
            fh.write("\n")
        else:
            fh.write("".join(f"{u} {v}\n" for u, v in edges.tolist()))
            fh.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(args, seed):
    graph, label = _load_source(args, seed)
    config = _config(args, seed)
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    base = 0 if seed is None else seed
    rows = [verify_run(graph, config, s, num_samples=args.q, label=label) for s in sweep_seeds(base, args.seeds)]
    summary = verify_summary(rows, config.delta)
    with _open_out(args.out) as fh:
        if args.format == "csv":
            write_csv(rows, fh, REPORT_COLUMNS)
        else:
            write_json({"graph": label, "rows": rows, "summary": summary}, fh)
    failed = [k for k, ok in summary["checks"].items() if not ok]
    print(f"verify: {summary['good_runs']}/{summary['runs']} good runs; "
          + ("PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"), file=sys.stderr)
    return EXIT_OK if summary["pass"] else EXIT_FAIL


def cmd_scale(args, seed):
    graph, label = _load_source(args, seed)
    _config(args, seed)
    try:
        q_grid = [int(float(q)) for q in args.q.split(",") if q.strip()]
    except ValueError:
        raise UsageError(f"bad --q grid {args.q!r}") from None
    if not q_grid or min(q_grid) < 1:
        raise UsageError("--q grid needs positive sample counts")
    base = 0 if seed is None else seed
    seeds = sweep_seeds(base, args.seeds)
    rows, summary = scaling_experiment(graph, args.eps, args.delta, q_grid, seeds,
                                       estimator=args.estimator, label=label)
    lo, hi = SCALE_RATIO_BAND
    ratios = summary["step_ratios"]
    summary["ratio_band"] = [lo, hi]
    summary["pass"] = all(lo <= r <= hi for r in ratios if not math.isnan(r))
    with _open_out(args.out) as fh:
        if args.format == "csv":
            cols = ["graph", "q", "seed", "x", "q_above_limit", "x_bar", "tau", "s", "preprocess_ok",
                    "preprocess_queries", "sample_queries", "total_queries", "mean_iterations"]
            write_csv(rows, fh, cols)
        else:
            write_json({"rows": rows, "summary": summary}, fh)
    shown = ", ".join(f"{r:.3f}" for r in ratios)
    print(f"scale: step ratios [{shown}] vs band [{lo}, {hi}]: {'PASS' if summary['pass'] else 'FAIL'}",
          file=sys.stderr)
    return EXIT_OK if summary["pass"] else EXIT_FAIL


_COMMANDS = {
    "gen": cmd_gen,
    "preprocess": cmd_preprocess,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "scale": cmd_scale,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed = seed_from_env(args.seed)
    except ValueError:
        print("subedge: error: SUBEDGE_SEED must be an integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, seed)
    except (UsageError, OSError, GraphFormatError, GraphValidationError, StateMismatchError,
            EmptyGraphError, json.JSONDecodeError, KeyError) as exc:
        print(f"subedge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreprocessingFailure, EstimatorBudgetExceeded, IterationCapExceeded) as exc:
        print(f"subedge: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"subedge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
