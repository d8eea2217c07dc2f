"""Deterministic 64-bit seed derivation.

All randomness in the package flows from explicit integer seeds.  Sweeps and
parallel runs derive per-task seeds with :func:`derive_seed`, a splitmix64
hash chain, so results are independent of scheduling order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 mixing step (Steele, Lea & Flood finalizer)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(base: int, *indices: int) -> int:
    """Mix ``base`` with a tuple of indices into a fresh 64-bit seed.

    The chain ``h <- splitmix64(h ^ index)`` makes seeds for distinct index
    tuples effectively independent while staying reproducible.
    """
    h = splitmix64(base & _MASK)
    for ix in indices:
        h = splitmix64(h ^ (int(ix) & _MASK))
    return h


def as_generator(seed) -> np.random.Generator:
    """Return a numpy Generator: pass through generators, seed anything else."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.uint64(int(seed) & _MASK))


def draw_u64(rng) -> int:
    """Draw a 64-bit state word, accepting either an int seed or a Generator."""
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 1 << 64, dtype=np.uint64))
    return int(rng) & _MASK
