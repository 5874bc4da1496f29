"""Seeded random streams.

All randomness flows from a single integer seed. Components draw from named
sub-streams so that, e.g., the estimator can be re-seeded without perturbing
the sampling stream.
"""
import os
import zlib

import numpy as np

SEED_ENV_VAR = "SUBEDGE_SEED"


def _stream_key(name):
    return zlib.crc32(name.encode("utf-8"))


def rng_stream(seed, name):
    """Return a PCG64 generator for the sub-stream ``name`` of ``seed``.

    ``seed=None`` gives fresh OS entropy. The same ``(seed, name)`` pair always
    yields the same sequence.
    """
    if seed is None:
        return np.random.default_rng()
    ss = np.random.SeedSequence(int(seed), spawn_key=(_stream_key(name),))
    return np.random.Generator(np.random.PCG64(ss))


def check_rng(random_state, name="default"):
    """Turn ``random_state`` into a ``numpy.random.Generator``.

    Accepts None, an int seed (mapped through :func:`rng_stream` with
    ``name``), or an existing Generator (returned as is).
    """
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return rng_stream(random_state, name)
    raise TypeError(
        f"random_state must be None, an int or a numpy Generator, got {type(random_state).__name__}"
    )


def seed_from_env(seed=None):
    """Fall back to $SUBEDGE_SEED when no explicit seed is given."""
    if seed is not None:
        return int(seed)
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return None
    return int(raw)


def derive_seed(seed, index):
    """Deterministic child seed ``index`` of ``seed`` (for seed sweeps)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_stream_key("sweep"), int(index)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
