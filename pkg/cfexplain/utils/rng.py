"""Seeded random streams.

Every stream is keyed by a purpose, the master seed and the ids of the entity
that owns it, so results do not depend on the order (or process) in which work
runs. The entropy handed to numpy is ``[purpose, len(key), len(ids), *key,
*ids]``; numpy zero-pads short entropy lists, and the length words keep
``(s, i)`` and ``(s, i, 0)`` apart.
"""

from enum import IntEnum
from typing import List, Sequence, Union

import numpy as np

SeedKey = Union[int, Sequence[int]]


class Stream(IntEnum):
    DIRECT = 0
    INSTANCE = 1
    TRAJECTORY = 2
    POSTERIOR = 3
    EXPLANATION = 4
    PROFILE = 5
    BASELINE = 6
    DIRICHLET = 7
    VERIFY = 8


def seed_entropy(seed: SeedKey, purpose: Stream, *ids: int) -> List[int]:
    key = [int(s) for s in seed] if isinstance(seed, (list, tuple)) else [int(seed)]
    ids = [int(i) for i in ids]
    words = key + ids
    if any(w < 0 for w in words):
        raise ValueError(f"seed keys must be non-negative, got {tuple(words)}")
    return [int(purpose), len(key), len(ids)] + words


def make_rng(seed: SeedKey, purpose: Stream, *ids: int) -> np.random.Generator:
    """Return a Generator for the ``purpose`` stream owned by (seed, *ids)."""
    return np.random.default_rng(seed_entropy(seed, purpose, *ids))


def as_rng(seed) -> np.random.Generator:
    """Accept a Generator, an int seed or a key tuple."""
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed, Stream.DIRECT)


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on the open interval (0, 1)."""
    return rng.uniform(np.finfo(float).tiny, 1.0, size=size)
