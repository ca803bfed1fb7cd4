"""Deterministic RNG seed derivation.

Reproducibility contract: every random draw in the package flows through a
``numpy.random.Generator`` seeded by :func:`derive_seed`, so identical seeds
give bitwise-identical results regardless of evaluation order or worker
count. The mixing function is a fixed splitmix64 chain and must not change
across releases.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Mix a master seed with integer indices into a new 64-bit seed.

    ``derive_seed(s)`` already differs from ``s``, so nested derivations
    never collide with their parent stream.
    """
    h = _splitmix64(seed & _MASK64)
    for idx in indices:
        h = _splitmix64(h ^ (idx & _MASK64))
    return h


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & _MASK64)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normal CN(0, 1): unit second moment per entry.

    Draw order (full real array, then full imaginary array) is part of the
    reproducibility contract.
    """
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)
