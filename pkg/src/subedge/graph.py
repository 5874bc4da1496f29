"""Immutable simple undirected graphs, the edge-list format, and generators.

Adjacency lists are stored in CSR form. The order of ``graph.neighbors(v)`` is
the order in which the edges incident to ``v`` were supplied (file order or
generation order); it is never sorted.
"""
from __future__ import annotations

import hashlib
import io
import os
import re

import numpy as np

from ._rng import rng_stream
from .exceptions import GraphFormatError, GraphValidationError

__all__ = [
    "Graph",
    "load_graph",
    "save_graph",
    "format_graph",
    "gen_graph",
    "parse_generator_spec",
    "star",
    "clique",
    "lollipop",
    "erdos_renyi",
    "clique_plus_bipartite",
    "circulant",
]

_HEADER_RE = re.compile(r"^#\s*n\s*=\s*(\d+)\s*$")


class Graph:
    """Simple undirected graph over vertices ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of vertices. Isolated vertices are allowed.
    edges : array-like of shape (k, 2)
        Undirected edges, each listed once. Their order fixes the adjacency
        order of both endpoints.
    """

    def __init__(self, n, edges):
        n = int(n)
        if n < 0:
            raise GraphValidationError(f"vertex count must be non-negative, got {n}")
        edges = np.asarray(edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, 2)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise GraphValidationError("edges must have shape (k, 2)")
        _validate_edges(n, edges)

        k = len(edges)
        # oriented edge 2j is (u_j, v_j), 2j+1 is (v_j, u_j)
        src = np.empty(2 * k, dtype=np.int64)
        dst = np.empty(2 * k, dtype=np.int64)
        src[0::2], src[1::2] = edges[:, 0], edges[:, 1]
        dst[0::2], dst[1::2] = edges[:, 1], edges[:, 0]
        order = np.argsort(src, kind="stable")
        degrees = np.bincount(src, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])

        self._n = n
        self._edges = _frozen(edges.copy())
        self._indices = _frozen(dst[order])
        self._indptr = _frozen(indptr)
        self._degrees = _frozen(degrees)
        self._edge_ids = None

    # -- basic properties ---------------------------------------------------

    @property
    def n(self):
        return self._n

    @property
    def m(self):
        """Number of oriented edges (sum of degrees)."""
        return int(self._indptr[-1])

    @property
    def num_undirected_edges(self):
        return len(self._edges)

    @property
    def d_avg(self):
        return self.m / self._n if self._n else 0.0

    @property
    def degrees(self):
        return self._degrees

    @property
    def indptr(self):
        return self._indptr

    @property
    def indices(self):
        return self._indices

    @property
    def edges(self):
        """Undirected edge list in construction order."""
        return self._edges

    def degree(self, v):
        return int(self._degrees[v])

    def neighbors(self, v):
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def max_degree(self):
        return int(self._degrees.max()) if self._n else 0

    # -- oriented edges -----------------------------------------------------

    def oriented_edges(self):
        """All oriented edges as an (m, 2) array, in CSR order.

        Row ``indptr[v] + i`` is ``(v, neighbors(v)[i])``; this is the index
        space used by :class:`~subedge.distributions.EdgeDistribution`.
        """
        src = np.repeat(np.arange(self._n, dtype=np.int64), self._degrees)
        return np.column_stack([src, self._indices])

    def edge_id(self, u, v):
        """CSR position of the oriented edge ``(u, v)``; KeyError if absent."""
        if self._edge_ids is None:
            self._edge_ids = {
                (int(a), int(b)): i for i, (a, b) in enumerate(self.oriented_edges())
            }
        return self._edge_ids[(int(u), int(v))]

    def check_symmetric(self):
        """Brute-force check that u in adj[v] iff v in adj[u], and no loops/dupes."""
        seen = set()
        for v in range(self._n):
            nbrs = self.neighbors(v).tolist()
            if len(set(nbrs)) != len(nbrs) or v in nbrs:
                return False
            seen.update((v, u) for u in nbrs)
        return all((u, v) in seen for (v, u) in seen)

    def checksum(self):
        """SHA-256 over n and the ordered undirected edge list."""
        h = hashlib.sha256()
        h.update(f"n={self._n};".encode())
        h.update(np.ascontiguousarray(self._edges, dtype="<i8").tobytes())
        return h.hexdigest()

    def __repr__(self):
        return f"Graph(n={self._n}, m={self.m})"


def _frozen(a):
    a.setflags(write=False)
    return a


def _validate_edges(n, edges):
    if len(edges) == 0:
        return
    if edges.min() < 0:
        raise GraphValidationError("vertex ids must be non-negative")
    if edges.max() >= n:
        raise GraphValidationError(f"vertex id {int(edges.max())} out of range for n={n}")
    loops = np.flatnonzero(edges[:, 0] == edges[:, 1])
    if loops.size:
        u = int(edges[loops[0], 0])
        raise GraphValidationError(f"self-loop at vertex {u}")
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keys = lo * n + hi
    uniq, counts = np.unique(keys, return_counts=True)
    if (counts > 1).any():
        key = int(uniq[np.argmax(counts > 1)])
        raise GraphValidationError(f"duplicate edge {{{key // n}, {key % n}}}")


# -- edge-list format -----------------------------------------------------------


def _parse_edge_list(lines):
    header_n = None
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = _HEADER_RE.match(line)
            if match is not None:
                if header_n is not None:
                    raise GraphFormatError("duplicate '# n=' header", lineno)
                header_n = int(match.group(1))
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected two vertex ids, got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"non-integer vertex id in {line!r}", lineno) from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"negative vertex id in {line!r}", lineno)
        pairs.append((u, v))
    return header_n, pairs


def load_graph(path):
    """Read an edge-list file.

    The optional ``# n=<N>`` header fixes the vertex count; otherwise it is
    the largest id plus one. Other ``#`` lines are comments.
    """
    if isinstance(path, io.TextIOBase):
        header_n, pairs = _parse_edge_list(path)
    else:
        with open(path, encoding="utf-8") as fh:
            header_n, pairs = _parse_edge_list(fh)
    inferred = 1 + max((max(p) for p in pairs), default=-1)
    n = header_n if header_n is not None else inferred
    return Graph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))


def format_graph(graph):
    lines = [f"# n={graph.n}"]
    lines.extend(f"{u} {v}" for u, v in graph.edges.tolist())
    return "\n".join(lines) + "\n"


def save_graph(graph, path):
    text = format_graph(graph)
    if isinstance(path, io.TextIOBase):
        path.write(text)
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# -- generators -----------------------------------------------------------------


def _nonempty(graph, what):
    if graph.n == 0 or graph.m == 0:
        raise GraphValidationError(f"degenerate {what}: n={graph.n}, m={graph.m}")
    return graph


def star(n):
    """Vertex 0 joined to leaves ``1..n-1``."""
    n = int(n)
    edges = [(0, leaf) for leaf in range(1, n)]
    return _nonempty(Graph(max(n, 0), np.array(edges, dtype=np.int64).reshape(-1, 2)), f"star({n})")


def _clique_edges(k, offset=0):
    iu, ju = np.triu_indices(k, 1)
    return np.column_stack([iu + offset, ju + offset]).astype(np.int64)


def clique(k):
    k = int(k)
    return _nonempty(Graph(max(k, 0), _clique_edges(max(k, 0))), f"clique({k})")


def lollipop(k, path_len):
    """Clique on ``0..k-1`` with a path of ``path_len`` extra vertices hanging off ``k-1``."""
    k, path_len = int(k), int(path_len)
    if k < 1 or path_len < 0:
        raise GraphValidationError(f"degenerate lollipop({k}, {path_len})")
    path = [(k - 1 + i, k + i) for i in range(path_len)]
    edges = np.vstack([_clique_edges(k), np.array(path, dtype=np.int64).reshape(-1, 2)])
    return _nonempty(Graph(k + path_len, edges), f"lollipop({k}, {path_len})")


def erdos_renyi(n, p, seed=None):
    """G(n, p); each of the n(n-1)/2 pairs is kept independently with probability p."""
    n, p = int(n), float(p)
    if not 0.0 <= p <= 1.0:
        raise GraphValidationError(f"edge probability must be in [0, 1], got {p}")
    if n <= 0:
        raise GraphValidationError(f"degenerate erdos_renyi({n}, {p})")
    rng = rng_stream(seed, "graph")
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    edges = np.column_stack([iu[keep], ju[keep]]).astype(np.int64)
    return _nonempty(Graph(n, edges), f"erdos_renyi({n}, {p})")


def clique_plus_bipartite(k, a, b):
    """Disjoint union of a k-clique and the complete bipartite graph K_{a,b}.

    The clique carries a small fraction of the edges (k(k-1)/2 against a*b),
    so a sampler that starves it is TVD-close but not pointwise-close to
    uniform.
    """
    k, a, b = int(k), int(a), int(b)
    if k < 0 or a < 0 or b < 0:
        raise GraphValidationError(f"degenerate clique_plus_bipartite({k}, {a}, {b})")
    left = np.arange(k, k + a, dtype=np.int64)
    right = np.arange(k + a, k + a + b, dtype=np.int64)
    bip = np.column_stack([np.repeat(left, b), np.tile(right, a)])
    edges = np.vstack([_clique_edges(k), bip.reshape(-1, 2)])
    return _nonempty(Graph(k + a + b, edges), f"clique_plus_bipartite({k}, {a}, {b})")


def circulant(n, k):
    """Ring on n vertices where each vertex links to its k nearest on each side (2k-regular)."""
    n, k = int(n), int(k)
    if n <= 2 * k or k < 1:
        raise GraphValidationError(f"degenerate circulant({n}, {k}): need n > 2k >= 2")
    edges = [(v, (v + j) % n) for j in range(1, k + 1) for v in range(n)]
    return _nonempty(Graph(n, np.array(edges, dtype=np.int64)), f"circulant({n}, {k})")


_GENERATORS = {
    "star": (star, (int,)),
    "clique": (clique, (int,)),
    "lollipop": (lollipop, (int, int)),
    "erdos_renyi": (erdos_renyi, (int, float)),
    "clique_plus_bipartite": (clique_plus_bipartite, (int, int, int)),
    "circulant": (circulant, (int, int)),
}
_ALIASES = {"er": "erdos_renyi", "gnp": "erdos_renyi", "cpb": "clique_plus_bipartite", "ring": "circulant"}


def parse_generator_spec(spec):
    """Parse ``"name:a,b"`` (e.g. ``"lollipop:10,50"``) into ``(name, args)``."""
    if not isinstance(spec, str):
        name, *args = spec
        spec = f"{name}:{','.join(str(a) for a in args)}"
    name, _, rest = spec.strip().partition(":")
    name = _ALIASES.get(name.strip().lower().replace("-", "_"), name.strip().lower().replace("-", "_"))
    if name not in _GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(_GENERATORS)}")
    _, types = _GENERATORS[name]
    raw = [a for a in rest.split(",") if a.strip()] if rest else []
    if len(raw) != len(types):
        raise ValueError(f"generator {name!r} takes {len(types)} argument(s), got {len(raw)}")
    try:
        args = tuple(t(a.strip()) for t, a in zip(types, raw))
    except ValueError:
        raise ValueError(f"bad arguments for generator {name!r}: {rest!r}") from None
    return name, args


def gen_graph(spec, seed=None):
    """Build a graph from a generator spec string; deterministic for fixed (spec, seed)."""
    name, args = parse_generator_spec(spec)
    fn, _ = _GENERATORS[name]
    if name == "erdos_renyi":
        return fn(*args, seed=seed)
    return fn(*args)
