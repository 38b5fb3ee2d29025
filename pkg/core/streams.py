"""Reproducible random streams.

One master seed; every consumer derives its own child generator from a key
path such as (seed, replicate_index, attempt). Streams never share state, so
the order in which parallel workers run cannot change any draw.
"""

from __future__ import annotations

import numpy as np

# key-path namespaces keep bootstrap, data and probe streams disjoint
STREAM_DATA = 0
STREAM_BOOTSTRAP = 1
STREAM_OPTIMIZER = 2
STREAM_PROBE = 3


def child_generator(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the child stream identified by ``keys`` under ``seed``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)


def child_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed for the child stream, for APIs that take ints."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
