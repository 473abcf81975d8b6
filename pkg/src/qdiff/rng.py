"""Reproducible random streams.

Every stream is derived from a 64-bit master seed plus an integer path, so
parallel workers (trials, components) draw from independent streams whose
contents do not depend on scheduling.
"""

from __future__ import annotations

import numpy as np

SEED_BITS = 64


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 1 << SEED_BITS:
        raise ValueError(f"seed must be a {SEED_BITS}-bit unsigned integer, got {seed}")
    return seed


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """PCG64 stream for ``(seed, *path)``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng: np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return derive_rng(rng)
