"""Water-filling power allocation over parallel streams.

Maximizes ``sum_k log2(1 + gains[k] * levels[k])`` subject to
``sum(levels) == budget`` via the exact sorted active-set solution: for each
candidate active-set size the water level has a closed form, and exactly one
size satisfies the KKT conditions. No iteration, no tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyGains


@dataclass(frozen=True)
class PowerAllocation:
    """Solution of one water-filling problem.

    ``levels[k] == max(water_level - 1/effective_gains[k], 0)`` exactly for
    the stored water level, and the levels sum to the budget.
    """

    levels: np.ndarray
    water_level: float
    effective_gains: np.ndarray


def waterfill(gains, budget: float) -> PowerAllocation:
    """Allocate ``budget`` across streams with the given positive power gains.

    Streams whose inverse gain exceeds the water level are shut off. Callers
    must pre-filter zero-gain streams (they receive zero power by definition
    and would otherwise divide by zero).
    """
    g = np.asarray(gains, dtype=np.float64).ravel()
    if g.size == 0:
        raise EmptyGains("no stream gains supplied")
    if np.any(g <= 0.0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite and strictly positive")
    if budget <= 0.0:
        raise ValueError("budget must be strictly positive")
    order = np.argsort(-g, kind="stable")
    inv_sorted = 1.0 / g[order]
    prefix = np.cumsum(inv_sorted)
    # Largest active-set size m whose closed-form water level exceeds the
    # worst active inverse gain is the unique KKT-consistent choice.
    mu = 0.0
    for m in range(g.size, 0, -1):
        mu = (budget + prefix[m - 1]) / m
        if mu > inv_sorted[m - 1]:
            break
    levels = np.maximum(mu - 1.0 / g, 0.0)
    return PowerAllocation(levels=levels, water_level=float(mu), effective_gains=g)


def apply_allocation(precoders, allocation: PowerAllocation) -> np.ndarray:
    """Scale and stack per-user precoders into one wide precoder.

    Column ``k`` of the result is the k-th column of ``[F_1, ..., F_U]``
    times ``sqrt(levels[k])``, so with unit-norm input columns the total
    squared norm equals the allocation budget.
    """
    stacked = np.hstack([np.asarray(f, dtype=np.complex128) for f in precoders])
    levels = allocation.levels
    if stacked.shape[1] != levels.size:
        raise DimensionMismatch(
            f"{stacked.shape[1]} stacked columns vs {levels.size} power levels")
    return stacked * np.sqrt(levels)[None, :]
