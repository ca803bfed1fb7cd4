"""Complex-matrix subspace primitives.

Rank-revealing orthonormal spans, orthogonal-complement projection and a
deterministic truncated SVD. Everything here is a pure function of its
inputs; dense SVD is used throughout since dimensions stay in the hundreds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RankTooLarge

_EPS = np.finfo(np.float64).eps

DEFAULT_RANK_TOL_FACTOR = 10.0


@dataclass(frozen=True)
class OrthonormalBasis:
    """Semi-unitary matrix whose columns span a subspace.

    ``matrix`` has shape (rows, rank) with ``matrix^H @ matrix = I``.
    A rank of zero is represented by a (rows, 0) matrix, not by an error.
    """

    matrix: np.ndarray
    rank: int


@dataclass(frozen=True)
class TruncatedSvd:
    """Best rank-k factors ``left @ diag(singulars) @ right^H``.

    ``left`` is (m, k), ``right`` is (n, k); ``singulars`` is descending.
    The per-pair phase is fixed (largest-magnitude entry of each left
    column real positive), so repeated calls are bitwise stable.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray


def rank_from_singulars(singulars: np.ndarray, max_dim: int,
                        rank_tol_factor: float = DEFAULT_RANK_TOL_FACTOR) -> int:
    """Number of singular values above the rank-revealing threshold."""
    if singulars.size == 0 or singulars[0] <= 0.0:
        return 0
    thresh = rank_tol_factor * max_dim * _EPS * singulars[0]
    return int(np.count_nonzero(singulars > thresh))


def orthonormal_span(m: np.ndarray,
                     rank_tol_factor: float = DEFAULT_RANK_TOL_FACTOR) -> OrthonormalBasis:
    """Orthonormal basis of the column space of ``m``.

    The numerical rank is decided by ``sigma_i > rank_tol_factor * max_dim *
    eps * sigma_1``; a zero (or empty) matrix yields rank 0 so degenerate
    channels never abort a Monte Carlo run.
    """
    m = np.ascontiguousarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    rows = m.shape[0]
    if m.size == 0:
        return OrthonormalBasis(np.zeros((rows, 0), dtype=np.complex128), 0)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    rank = rank_from_singulars(s, max(m.shape), rank_tol_factor)
    return OrthonormalBasis(np.ascontiguousarray(u[:, :rank]), rank)


def project_complement(m: np.ndarray, basis: OrthonormalBasis) -> np.ndarray:
    """Project the rows of ``m`` onto the orthogonal complement of ``basis``.

    Returns ``m - (m @ B) @ B^H``, i.e. ``m @ (I - B B^H)`` without forming
    the projector. The result annihilates the basis: ``result @ B = 0``.
    """
    m = np.asarray(m, dtype=np.complex128)
    b = basis.matrix
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if m.shape[1] != b.shape[0]:
        raise DimensionMismatch(
            f"cannot project {m.shape} against a basis of {b.shape[0]} rows")
    if basis.rank == 0:
        return m.copy()
    return m - (m @ b) @ b.conj().T


def truncated_svd(m: np.ndarray, k: int) -> TruncatedSvd:
    """Deterministic best rank-k SVD of ``m``.

    Raises :class:`RankTooLarge` if ``k`` exceeds ``min(m.shape)``. The
    factors carry the phase convention described on :class:`TruncatedSvd`.
    """
    m = np.ascontiguousarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise DimensionMismatch(f"expected a nonempty 2-d matrix, got shape {m.shape}")
    if k < 1 or k > min(m.shape):
        raise RankTooLarge(f"rank {k} not in [1, {min(m.shape)}] for shape {m.shape}")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    left = np.ascontiguousarray(u[:, :k])
    right = np.ascontiguousarray(vh[:k].conj().T)
    singulars = np.ascontiguousarray(s[:k])
    _fix_phases(left, right)
    return TruncatedSvd(left, singulars, right)


def _fix_phases(left: np.ndarray, right: np.ndarray) -> None:
    # Rotate each singular pair so the largest-magnitude entry of the left
    # column is real positive; reconstruction is invariant because the same
    # unit rotation is applied to both factors.
    idx = np.argmax(np.abs(left), axis=0)
    pivots = left[idx, np.arange(left.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0.0, pivots / np.where(mags > 0.0, mags, 1.0), 1.0)
    left *= phases.conj()[np.newaxis, :]
    right *= phases.conj()[np.newaxis, :]
