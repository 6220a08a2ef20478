"""Seeded random streams.

Every stochastic routine takes a ``numpy.random.Generator``. We back it with
the counter-based Philox bit generator so that streams are splittable via
``SeedSequence`` spawning: a run seeded with ``s`` always consumes the same
numbers in the same order, and child streams never overlap their parent.
"""
from __future__ import annotations

import numpy as np

SeededRng = np.random.Generator


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    if isinstance(seed, (bool, np.bool_)) or int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def spawn(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split ``n`` independent child streams off ``rng``."""
    return rng.spawn(n)
