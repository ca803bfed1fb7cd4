import numpy as np

from dopbeam.channel import ChannelSet
from dopbeam.seeding import complex_normal, derive_seed, rng_from


def gaussian_channels(n_users, n_rx, n_tx, seed):
    """Unit-variance i.i.d. complex Gaussian channels (non-square-array geometries)."""
    mats = [complex_normal(rng_from(derive_seed(seed, u)), (n_rx, n_tx))
            for u in range(n_users)]
    return ChannelSet.from_matrices(mats)


def bisect_water_level(gains, budget, iters=200):
    """Independent water-filling oracle: bisection on the water level."""
    gains = np.asarray(gains, dtype=float)
    inv = 1.0 / gains
    lo, hi = 0.0, budget + inv.max()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - inv, 0.0).sum() > budget:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)
    return np.maximum(mu - inv, 0.0), mu
