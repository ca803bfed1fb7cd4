"""Reference schemes bracketing the projection algorithm.

Block diagonalization nulls interference in the full-channel null space
(feasible only with enough transmit antennas), and the broadcast-channel
sum capacity computed through the dual multiple-access problem provides the
theoretical ceiling for any transmit strategy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, Tolerances
from .dop import BeamformerSet, finalize
from .errors import NonConvergence
from .metrics import sum_rate
from .subspace import rank_from_singulars, truncated_svd
from .waterfill import waterfill

_LN2 = np.log(2.0)

DPC_REL_TOL = 1e-8
DPC_MAX_OUTER = 500


@dataclass(frozen=True)
class BaselineResult:
    """Outcome of one baseline evaluation.

    ``sum_rate_bits`` is ``None`` when the scheme is infeasible for the
    geometry; a number is never fabricated in that case.
    """

    algorithm: str
    sum_rate_bits: float | None
    feasible: bool


def bd_beamformers(channels, config: SystemConfig,
                   tolerances: Tolerances | None = None):
    """Block-diagonalization precoders/combiners, or infeasibility.

    Each user's precoder lives in the null space of the stacked full
    channels of all other users; the scheme is feasible only when that null
    space keeps at least ``n_streams`` dimensions for every user. Returns
    ``(beamformer_set, True)`` or ``(None, False)``.
    """
    tol = tolerances if tolerances is not None else Tolerances()
    mats = channels.channels if hasattr(channels, "channels") else list(channels)
    n_users, ns = config.n_users, config.n_streams
    n_tx = mats[0].shape[1]
    precoders, combiners, stage2 = [], [], []
    singulars = np.zeros((n_users, ns))
    for u in range(n_users):
        others = [mats[v] for v in range(n_users) if v != u]
        if others:
            composite = np.vstack(others)
            _, s, vh = np.linalg.svd(composite, full_matrices=True)
            rank = rank_from_singulars(s, max(composite.shape), tol.rank_tol_factor)
            if n_tx - rank < ns:
                return None, False
            null_basis = vh[rank:].conj().T
        else:
            null_basis = np.eye(n_tx, dtype=np.complex128)
        tsvd = truncated_svd(mats[u] @ null_basis, ns)
        precoders.append(null_basis @ tsvd.right)
        combiners.append(tsvd.left)
        stage2.append(np.eye(ns, dtype=np.complex128))
        singulars[u] = tsvd.singulars
    bset = BeamformerSet(precoders=precoders, combiners=combiners,
                         combiner_stage1=list(combiners), combiner_stage2=stage2,
                         top_singulars=singulars)
    return bset, True


def evaluate_bd(channels, config: SystemConfig,
                tolerances: Tolerances | None = None) -> BaselineResult:
    """Water-filled block-diagonalization sum rate (or infeasible result)."""
    bset, feasible = bd_beamformers(channels, config, tolerances)
    if not feasible:
        return BaselineResult(algorithm="bd", sum_rate_bits=None, feasible=False)
    final = finalize(bset, config, tolerances)
    mats = channels.channels if hasattr(channels, "channels") else list(channels)
    rate = sum_rate(mats, final.precoder_blocks(config.n_streams),
                    final.combiners, config)
    return BaselineResult(algorithm="bd", sum_rate_bits=rate, feasible=True)


def _mac_objective(mats, covariances, noise_power):
    n_tx = mats[0].shape[1]
    gram = np.eye(n_tx, dtype=np.complex128)
    for h, q in zip(mats, covariances):
        gram = gram + h.conj().T @ q @ h / noise_power
    sign, logdet = np.linalg.slogdet(0.5 * (gram + gram.conj().T))
    return float(logdet / _LN2) if sign.real > 0 else 0.0


def dpc_sum_capacity(channels, config: SystemConfig, rel_tol: float = DPC_REL_TOL,
                     max_outer: int = DPC_MAX_OUTER,
                     return_history: bool = False):
    """Broadcast-channel sum capacity under the total power constraint.

    Solved in the dual multiple-access domain by iterative water-filling
    with averaging: each round water-fills all users' whitened eigenmodes
    jointly against the previous interference, then moves each uplink
    covariance a 1/U step toward its water-filled update. The objective is
    non-decreasing and the problem is concave, so the converged value is
    the capacity. Raises :class:`NonConvergence` after ``max_outer`` rounds.
    """
    mats = [np.asarray(h, dtype=np.complex128)
            for h in (channels.channels if hasattr(channels, "channels") else channels)]
    n_users = config.n_users
    power, noise = config.total_power, config.noise_power
    n_tx = mats[0].shape[1]
    covariances = [power / (n_users * h.shape[0]) * np.eye(h.shape[0], dtype=np.complex128)
                   for h in mats]
    history = [_mac_objective(mats, covariances, noise)]
    for _ in range(max_outer):
        total = np.zeros((n_tx, n_tx), dtype=np.complex128)
        for h, q in zip(mats, covariances):
            total += h.conj().T @ q @ h / noise
        eigvecs, eigvals, counts = [], [], []
        for u, h in enumerate(mats):
            z = np.eye(n_tx, dtype=np.complex128) + total \
                - mats[u].conj().T @ covariances[u] @ mats[u] / noise
            m = h @ np.linalg.solve(z, h.conj().T) / noise
            vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
            vals = np.maximum(vals, 0.0)
            eigvals.append(vals)
            eigvecs.append(vecs)
            counts.append(vals.size)
        stacked = np.concatenate(eigvals)
        levels = np.zeros_like(stacked)
        positive = stacked > 0.0
        if positive.any():
            levels[positive] = waterfill(stacked[positive], power).levels
        offset = 0
        for u in range(n_users):
            p_u = levels[offset:offset + counts[u]]
            offset += counts[u]
            filled = (eigvecs[u] * p_u[None, :]) @ eigvecs[u].conj().T
            covariances[u] = covariances[u] + (filled - covariances[u]) / n_users
        history.append(_mac_objective(mats, covariances, noise))
        if abs(history[-1] - history[-2]) <= rel_tol * max(history[-2], 1.0):
            result = history[-1]
            return (result, np.array(history)) if return_history else result
    raise NonConvergence(
        f"dual-domain water-filling did not converge within {max_outer} rounds")


def evaluate_dpc(channels, config: SystemConfig) -> BaselineResult:
    return BaselineResult(algorithm="dpc",
                          sum_rate_bits=dpc_sum_capacity(channels, config),
                          feasible=True)
