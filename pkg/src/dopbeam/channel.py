"""Clustered geometric mmWave channel synthesis for square planar arrays.

Each user's channel is a normalized sum of outer products of receive and
transmit steering vectors over ``n_clusters * n_rays`` paths with CN(0, 1)
gains, so the ensemble mean of ``||H||_F^2`` equals ``n_tx * n_rx``.

Angle conventions (the model itself is convention-agnostic):
  - cluster-center azimuths uniform on [-pi/2, pi/2], elevations uniform on
    [-pi/4, pi/4], for departure and arrival independently;
  - within-cluster ray offsets are Laplacian with scale ``sigma / sqrt(2)``
    so their standard deviation equals the configured spread;
  - angles are kept in radians internally, degrees only at the config edge.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, is_perfect_square
from .errors import DimensionMismatch, NotSquare
from .seeding import complex_normal, derive_seed, rng_from


@dataclass(frozen=True)
class ChannelParams:
    """Geometry and seeding of the clustered channel model."""

    n_clusters: int = 5
    n_rays: int = 10
    azimuth_spread_deg: float = 10.0
    elevation_spread_deg: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_rays < 1:
            raise ValueError("n_clusters and n_rays must be at least 1")
        for name in ("azimuth_spread_deg", "elevation_spread_deg"):
            spread = getattr(self, name)
            if not 0.0 < spread < 90.0:
                raise ValueError(f"{name} must lie in (0, 90) degrees")


@dataclass
class ChannelSet:
    """Per-user channel matrices plus the draw that generated them.

    ``angles[u]`` has shape (n_clusters, n_rays, 4) ordered as departure
    azimuth, departure elevation, arrival azimuth, arrival elevation.
    ``params``/``path_gains``/``angles`` are ``None`` for externally
    supplied matrices.
    """

    channels: list
    params: ChannelParams | None = None
    path_gains: list | None = None
    angles: list | None = None

    @classmethod
    def from_matrices(cls, matrices) -> "ChannelSet":
        mats = [np.ascontiguousarray(h, dtype=np.complex128) for h in matrices]
        if not mats:
            raise ValueError("at least one channel matrix is required")
        shape = mats[0].shape
        for h in mats:
            if h.ndim != 2 or h.shape != shape:
                raise DimensionMismatch("all channel matrices must share one 2-d shape")
        return cls(channels=mats)

    @property
    def n_users(self) -> int:
        return len(self.channels)


def steering_vector(azimuth: float, elevation: float, n_antennas: int) -> np.ndarray:
    """Unit-norm response of a half-wavelength square planar array.

    Grid entry (m, n) is ``exp(1j*pi*(m*sin(az)*sin(el) + n*cos(el))) /
    sqrt(N)`` with m, n in {0, ..., sqrt(N)-1}, flattened row-major.
    """
    if not is_perfect_square(n_antennas):
        raise NotSquare(f"n_antennas={n_antennas} is not a perfect square")
    side = math.isqrt(n_antennas)
    grid = np.arange(side)
    phase = np.pi * (np.add.outer(grid * (np.sin(azimuth) * np.sin(elevation)),
                                  grid * np.cos(elevation)))
    return np.exp(1j * phase).ravel() / np.sqrt(n_antennas)


def _steering_matrix(azimuths, elevations, n_antennas):
    side = math.isqrt(n_antennas)
    grid = np.arange(side)
    az = np.asarray(azimuths, dtype=np.float64).ravel()
    el = np.asarray(elevations, dtype=np.float64).ravel()
    row = grid[:, None] * (np.sin(az) * np.sin(el))[None, :]
    col = grid[:, None] * np.cos(el)[None, :]
    phase = np.pi * (row[:, None, :] + col[None, :, :])
    return np.exp(1j * phase).reshape(n_antennas, az.size) / np.sqrt(n_antennas)


def _draw_user(rng, params: ChannelParams):
    ncl, nray = params.n_clusters, params.n_rays
    b_az = math.radians(params.azimuth_spread_deg) / math.sqrt(2.0)
    b_el = math.radians(params.elevation_spread_deg) / math.sqrt(2.0)
    # Draw order is part of the reproducibility contract: cluster centers
    # (dep az, dep el, arr az, arr el), ray offsets in the same order, gains.
    centers = [rng.uniform(-np.pi / 2, np.pi / 2, ncl),
               rng.uniform(-np.pi / 4, np.pi / 4, ncl),
               rng.uniform(-np.pi / 2, np.pi / 2, ncl),
               rng.uniform(-np.pi / 4, np.pi / 4, ncl)]
    scales = [b_az, b_el, b_az, b_el]
    angles = np.empty((ncl, nray, 4))
    for j in range(4):
        offsets = rng.laplace(0.0, scales[j], (ncl, nray))
        angles[:, :, j] = centers[j][:, None] + offsets
    gains = complex_normal(rng, (ncl, nray))
    return gains, angles


def generate_channel_set(config: SystemConfig, params: ChannelParams) -> ChannelSet:
    """Synthesize all users' channels deterministically from the seed.

    User ``u`` is drawn from its own generator seeded by
    ``derive_seed(params.seed, u)``, so a user's matrix does not depend on
    how many other users exist and trials can run in parallel.
    """
    for name, n in (("n_tx", config.n_tx), ("n_rx", config.n_rx)):
        if not is_perfect_square(n):
            raise NotSquare(f"{name}={n} is not a perfect square")
    scale = math.sqrt(config.n_tx * config.n_rx / (params.n_clusters * params.n_rays))
    channels, all_gains, all_angles = [], [], []
    for u in range(config.n_users):
        rng = rng_from(derive_seed(params.seed, u))
        gains, angles = _draw_user(rng, params)
        a_t = _steering_matrix(angles[:, :, 0], angles[:, :, 1], config.n_tx)
        a_r = _steering_matrix(angles[:, :, 2], angles[:, :, 3], config.n_rx)
        h = scale * (a_r * gains.ravel()[None, :]) @ a_t.conj().T
        channels.append(np.ascontiguousarray(h))
        all_gains.append(gains)
        all_angles.append(angles)
    return ChannelSet(channels=channels, params=params,
                      path_gains=all_gains, angles=all_angles)


_DUMP_HEADER = struct.Struct("<QQQQ")


def save_channel_set(channel_set: ChannelSet, path) -> None:
    """Write a binary dump: little-endian uint64 (n_users, n_rx, n_tx, seed)
    followed per user by row-major complex entries as float64 (re, im) pairs.
    """
    mats = channel_set.channels
    n_rx, n_tx = mats[0].shape
    seed = channel_set.params.seed if channel_set.params is not None else 0
    with open(path, "wb") as fh:
        fh.write(_DUMP_HEADER.pack(len(mats), n_rx, n_tx, seed))
        for h in mats:
            interleaved = np.empty((n_rx, n_tx, 2), dtype="<f8")
            interleaved[:, :, 0] = h.real
            interleaved[:, :, 1] = h.imag
            fh.write(interleaved.tobytes())


def load_channel_set(path) -> tuple[ChannelSet, int]:
    """Read a dump written by :func:`save_channel_set`; returns (set, seed)."""
    with open(path, "rb") as fh:
        n_users, n_rx, n_tx, seed = _DUMP_HEADER.unpack(fh.read(_DUMP_HEADER.size))
        mats = []
        count = n_rx * n_tx * 2
        for _ in range(n_users):
            flat = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
            pairs = flat.reshape(n_rx, n_tx, 2)
            mats.append(np.ascontiguousarray(pairs[:, :, 0] + 1j * pairs[:, :, 1]))
    return ChannelSet(channels=mats), seed
