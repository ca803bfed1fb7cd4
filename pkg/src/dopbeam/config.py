"""System-wide configuration and shared numeric tolerances.

All powers are stored in linear units; decibels appear only at I/O
boundaries (``snr_db`` is kept for round-tripping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleConfig, NotSquare


def is_perfect_square(n: int) -> bool:
    if n < 1:
        return False
    r = math.isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters of one multiuser downlink setup.

    Immutable after construction; safe to share between threads.
    """

    n_tx: int
    n_rx: int
    n_users: int
    n_streams: int
    n_rf_tx: int
    n_rf_rx: int
    total_power: float
    noise_power: float
    snr_db: float


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds used by the projection pipeline and its checks."""

    rank_tol_factor: float = 10.0
    mui_residual_tol: float = 1e-10
    monotonicity_tol: float = 1e-6
    convergence_rel_tol: float = 1e-6
    max_iterations: int = 20

    def __post_init__(self):
        for name in ("rank_tol_factor", "mui_residual_tol",
                     "monotonicity_tol", "convergence_rel_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    def rank_threshold(self, max_dim: int, largest_singular: float) -> float:
        eps = 2.220446049250313e-16
        return self.rank_tol_factor * max_dim * eps * largest_singular


def make_config(snr_db: float, n_tx: int, n_rx: int, n_users: int,
                n_streams: int, n_rf_tx: int | None = None,
                n_rf_rx: int | None = None, noise_power: float = 1.0,
                require_square: bool = True) -> SystemConfig:
    """Validate dimensions and build a :class:`SystemConfig`.

    ``n_rf_tx`` defaults to ``n_users * n_streams`` and ``n_rf_rx`` to
    ``n_streams`` (the minimal feasible chain counts). The SNR sets the
    total transmit power as ``noise_power * 10**(snr_db / 10)``.

    ``require_square=False`` skips the square-planar-array check for
    synthetic channels that do not come from the geometric model.
    """
    if n_rf_tx is None:
        n_rf_tx = n_users * n_streams
    if n_rf_rx is None:
        n_rf_rx = n_streams
    for name, value in (("n_tx", n_tx), ("n_rx", n_rx), ("n_users", n_users),
                        ("n_streams", n_streams), ("n_rf_tx", n_rf_tx),
                        ("n_rf_rx", n_rf_rx)):
        if int(value) != value or value < 1:
            raise InfeasibleConfig(f"{name} must be a positive integer, got {value!r}")
    if noise_power <= 0:
        raise InfeasibleConfig("noise_power must be strictly positive")
    if n_users * n_streams > n_rf_tx:
        raise InfeasibleConfig(
            f"need n_users*n_streams <= n_rf_tx, got {n_users * n_streams} > {n_rf_tx}")
    if n_rf_tx > n_tx:
        raise InfeasibleConfig(f"need n_rf_tx <= n_tx, got {n_rf_tx} > {n_tx}")
    if n_streams > n_rf_rx:
        raise InfeasibleConfig(f"need n_streams <= n_rf_rx, got {n_streams} > {n_rf_rx}")
    if n_rf_rx > n_rx:
        raise InfeasibleConfig(f"need n_rf_rx <= n_rx, got {n_rf_rx} > {n_rx}")
    if require_square:
        for name, value in (("n_tx", n_tx), ("n_rx", n_rx)):
            if not is_perfect_square(value):
                raise NotSquare(f"{name}={value} is not a perfect square")
    total_power = noise_power * 10.0 ** (snr_db / 10.0)
    return SystemConfig(n_tx=int(n_tx), n_rx=int(n_rx), n_users=int(n_users),
                        n_streams=int(n_streams), n_rf_tx=int(n_rf_tx),
                        n_rf_rx=int(n_rf_rx), total_power=total_power,
                        noise_power=float(noise_power), snr_db=float(snr_db))
