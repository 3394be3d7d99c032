"""Seed fan-out.

Every random consumer draws from its own Philox stream keyed by
``(master seed, stream id, *extra)``. Philox is counter based and the key
is derived through :class:`numpy.random.SeedSequence`, so registering a new
stream never shifts the draws of an existing one.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# Fixed ids; append new names, never renumber.
STREAMS = {
    "terrain": 0,
    "layout": 1,
    "corruption": 2,
    "drift": 3,
    "sweep": 4,
}


def _sequence(seed: int, name: str, extra: tuple[int, ...]) -> np.random.SeedSequence:
    try:
        sid = STREAMS[name]
    except KeyError:
        raise KeyError(f"unknown random stream {name!r}") from None
    return np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=(sid, *extra))


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for stream ``name`` under master ``seed``."""
    return np.random.Generator(np.random.Philox(_sequence(seed, name, extra)))


def derive_seed(seed: int, name: str, *extra: int) -> int:
    """64-bit child seed, for APIs that take a plain integer seed."""
    return int(_sequence(seed, name, extra).generate_state(1, np.uint64)[0])
