"""Walker alias tables for constant-time sampling from a fixed discrete distribution.

Construction works in exact integer units: with total weight ``W`` and ``l``
items, every slot has capacity ``W`` and item ``j`` brings ``w_j * l`` units.
The split is therefore exact and the only rounding is the final conversion of
each slot threshold to binary64. Real-valued weights are first scaled to
integers exactly (every double is a dyadic rational).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._rng import check_rng

__all__ = ["AliasTable", "build_alias", "sample_alias"]

_INT64_SAFE = 2**62


@njit(cache=True)
def _vose_int64(units, capacity):
    l = units.shape[0]
    cut = np.full(l, capacity, dtype=np.int64)
    alias = np.arange(l, dtype=np.int64)
    small = np.empty(l, dtype=np.int64)
    large = np.empty(l, dtype=np.int64)
    ns = 0
    nl = 0
    for j in range(l):
        if units[j] < capacity:
            small[ns] = j
            ns += 1
        else:
            large[nl] = j
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        cut[s] = units[s]
        alias[s] = g
        units[g] -= capacity - units[s]
        if units[g] < capacity:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    return cut, alias


def _vose_pyint(units, capacity):
    l = len(units)
    cut = [capacity] * l
    alias = list(range(l))
    small = [j for j, u in enumerate(units) if u < capacity]
    large = [j for j, u in enumerate(units) if u >= capacity]
    while small and large:
        s = small.pop()
        g = large.pop()
        cut[s] = units[s]
        alias[s] = g
        units[g] -= capacity - units[s]
        (small if units[g] < capacity else large).append(g)
    return cut, alias


def _to_exact_integers(weights):
    """Scale non-negative finite doubles to Python ints with identical ratios."""
    ratios = [float(w).as_integer_ratio() for w in weights]
    denom = 1
    for _, d in ratios:
        denom = max(denom, d)  # denominators are powers of two
    return [num * (denom // d) for num, d in ratios]


@dataclass(frozen=True, eq=False)
class AliasTable:
    """Alias table over ``len(items)`` slots.

    Slot ``i`` keeps its own item with probability ``prob[i]`` and otherwise
    yields ``items[alias[i]]``.
    """

    items: np.ndarray
    prob: np.ndarray
    alias: np.ndarray
    total_weight: float
    _cut: object = field(default=None, repr=False)
    _capacity: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.prob)

    def encoded_probabilities(self):
        """Per-item probability implied by the table, by summing slot masses.

        This is an analytic enumeration, not a sampling estimate.
        """
        l = len(self.prob)
        mass = self.prob.astype(np.float64).copy()
        np.add.at(mass, self.alias, 1.0 - self.prob)
        return mass / l

    def sample_index(self, rng, size=None):
        """Draw slot-resolved item positions (indices into ``items``)."""
        l = len(self.prob)
        if size is None:
            slot = int(rng.integers(l))
            return slot if rng.random() < self.prob[slot] else int(self.alias[slot])
        slots = rng.integers(l, size=size)
        keep = rng.random(size) < self.prob[slots]
        return np.where(keep, slots, self.alias[slots])

    def sample(self, rng, size=None):
        pos = self.sample_index(rng, size)
        if size is None:
            return self.items[pos].item()
        return self.items[pos]


def build_alias(weights, items=None):
    """Build an :class:`AliasTable` from non-negative weights.

    Parameters
    ----------
    weights : array-like
        Non-negative, finite, at least one positive. Integer dtypes take a
        fast exact path.
    items : array-like, optional
        Item ids returned by sampling; defaults to ``arange(len(weights))``.
    """
    w = np.asarray(weights)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D sequence")
    if w.dtype.kind not in "iuf" and w.dtype != np.bool_:
        raise TypeError(f"weights must be numeric, got dtype {w.dtype}")
    if w.dtype.kind == "f" and not np.isfinite(w).all():
        raise ValueError("weights must be finite")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    if not (w > 0).any():
        raise ValueError("at least one weight must be positive")
    l = w.size
    items = np.arange(l, dtype=np.int64) if items is None else np.asarray(items)
    if items.shape != (l,):
        raise ValueError("items must match weights in length")

    if w.dtype.kind in "iub":
        w64 = w.astype(np.int64)
        capacity = int(w64.sum(dtype=np.int64)) if l * int(w64.max()) < _INT64_SAFE else int(sum(map(int, w)))
        if capacity * l < _INT64_SAFE:
            cut, alias = _vose_int64(w64 * l, np.int64(capacity))
            prob = cut / float(capacity)
            total = float(capacity)
            return AliasTable(items, prob, alias, total, cut, capacity)
        int_weights = [int(x) for x in w.tolist()]
    else:
        int_weights = _to_exact_integers(w.tolist())

    capacity = sum(int_weights)
    cut, alias = _vose_pyint([x * l for x in int_weights], capacity)
    prob = np.array([c / capacity for c in cut], dtype=np.float64)
    total = math.fsum(float(x) for x in w.tolist())
    return AliasTable(items, prob, np.array(alias, dtype=np.int64), total, cut, capacity)


def sample_alias(table, rng=None):
    """One draw: a uniform slot plus one threshold comparison."""
    return table.sample(check_rng(rng, "alias"))
