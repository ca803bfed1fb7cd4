"""Per-user link quality: spectral efficiency and power bookkeeping.

Rates assume Gaussian signaling with uniform per-stream power
``total_power / (n_users * n_streams)``; water-filled precoders carry their
allocation inside the column scaling, so the same formulas apply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import DimensionMismatch, SingularCovariance

_LN2 = np.log(2.0)

_SINGULAR_EIG_FRACTION = 1e-14


@dataclass(frozen=True)
class UserLinkReport:
    """Rate plus the power diagnostics behind it, all finite and >= 0."""

    rate_bits: float
    signal_power: float
    noise_power: float
    mui_power: float


def _matrices(channels):
    return channels.channels if hasattr(channels, "channels") else list(channels)


def _stream_scale(config: SystemConfig) -> float:
    return config.total_power / (config.n_users * config.n_streams)


def interference_covariance(u: int, channels, precoders, combiner: np.ndarray,
                            config: SystemConfig) -> np.ndarray:
    """Covariance of combined interference plus noise at user ``u``.

    ``(P/(U*Ns)) * sum_{v != u} W^H H F_v F_v^H H^H W + noise * W^H W``,
    Hermitian-symmetrized after accumulation.
    """
    h = _matrices(channels)[u]
    w = np.asarray(combiner, dtype=np.complex128)
    if h.shape[0] != w.shape[0]:
        raise DimensionMismatch(
            f"combiner rows {w.shape[0]} do not match channel rows {h.shape[0]}")
    wh_h = w.conj().T @ h
    acc = np.zeros((w.shape[1], w.shape[1]), dtype=np.complex128)
    for v, f in enumerate(precoders):
        if v == u:
            continue
        f = np.asarray(f, dtype=np.complex128)
        if f.shape[0] != h.shape[1]:
            raise DimensionMismatch(
                f"precoder {v} has {f.shape[0]} rows, channel has {h.shape[1]} columns")
        g = wh_h @ f
        acc += g @ g.conj().T
    cov = _stream_scale(config) * acc + config.noise_power * (w.conj().T @ w)
    return 0.5 * (cov + cov.conj().T)


def _whitened_signal(u, channels, precoders, combiner, config):
    cov = interference_covariance(u, channels, precoders, combiner, config)
    evals, evecs = np.linalg.eigh(cov)
    trace = float(evals.sum())
    if trace <= 0.0 or evals[0] < _SINGULAR_EIG_FRACTION * trace:
        raise SingularCovariance(
            f"user {u}: covariance smallest eigenvalue {evals[0] if trace > 0 else 0.0:g} "
            f"below {_SINGULAR_EIG_FRACTION:g} of trace {trace:g}")
    h = _matrices(channels)[u]
    w = np.asarray(combiner, dtype=np.complex128)
    g = w.conj().T @ h @ np.asarray(precoders[u], dtype=np.complex128)
    return (evecs.conj().T @ g) / np.sqrt(evals)[:, None]


def user_rate(u: int, channels, precoders, combiner: np.ndarray,
              config: SystemConfig) -> float:
    """Spectral efficiency of user ``u`` in bits/s/Hz.

    Computed as ``sum log2(1 + scale * s_i^2)`` over the singular values of
    the noise-whitened effective channel; no explicit inverse or raw
    determinant is formed, which keeps high-SNR evaluations stable.
    """
    white = _whitened_signal(u, channels, precoders, combiner, config)
    s = np.linalg.svd(white, compute_uv=False)
    return float(np.sum(np.log1p(_stream_scale(config) * s * s)) / _LN2)


def link_report(u: int, channels, precoders, combiners,
                config: SystemConfig) -> UserLinkReport:
    """Bundle rate, signal power, combined-noise power and residual MUI."""
    h = _matrices(channels)[u]
    w = np.asarray(combiners[u], dtype=np.complex128)
    rate = user_rate(u, channels, precoders, w, config)
    wh_h = w.conj().T @ h
    signal = float(np.linalg.norm(wh_h @ precoders[u]) ** 2)
    noise = float(config.noise_power * np.linalg.norm(w) ** 2)
    mui = 0.0
    for v, f in enumerate(precoders):
        if v != u:
            mui += float(np.linalg.norm(wh_h @ f) ** 2)
    return UserLinkReport(rate_bits=rate, signal_power=signal, noise_power=noise,
                          mui_power=_stream_scale(config) * mui)


def sum_rate(channels, precoders, combiners, config: SystemConfig) -> float:
    """Total spectral efficiency: the sum of the per-user rates."""
    return sum(user_rate(u, channels, precoders, combiners[u], config)
               for u in range(len(_matrices(channels))))
