"""Iterative dual-orthogonal-projection multiuser beamforming.

Each sweep recomputes the per-user effective channels, then for every user:
project the interferers' composite column space out of the user's effective
channel (exact interference nulling), take the dominant SVD factors as
precoder and second-stage combiner, and finally project the combiner onto
the span of ``H F`` to drop components that add noise but no gain. Per-user
rate, signal power and combined-noise power are monotone across sweeps
(up to the error of the nulling approximation), which is what the recorded
traces are checked against.

The refined first-stage combiner is kept column-orthonormal between sweeps.
Only its span enters the next sweep's subspace dynamics, so this changes no
recorded rate; it does pin the effective-channel singular values to the
scale the stacked water-filling step assumes, making the final power
allocation exactly optimal for the evaluated rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import SystemConfig, Tolerances
from .errors import StreamsExceedNullity
from .metrics import link_report
from .seeding import complex_normal, derive_seed, rng_from
from .subspace import OrthonormalBasis, orthonormal_span, project_complement, truncated_svd
from .waterfill import PowerAllocation, apply_allocation, waterfill


class StopReason(Enum):
    MAX_ITERATIONS = "max_iterations"
    RELATIVE_RATE_TOLERANCE = "relative_rate_tolerance"


@dataclass
class BeamformerSet:
    """Fully-digital per-user factors from one run.

    ``combiners[u] == combiner_stage1[u] @ combiner_stage2[u]`` exactly;
    precoders and stage-2 combiners have orthonormal columns.
    ``top_singulars`` has shape (n_users, n_streams).
    """

    precoders: list
    combiners: list
    combiner_stage1: list
    combiner_stage2: list
    top_singulars: np.ndarray


@dataclass
class IterationRecord:
    """Diagnostics after one full sweep (uniform per-stream power)."""

    iteration: int
    per_user: list
    mui_certificate: float
    nullity_users: tuple = ()

    @property
    def sum_rate_bits(self) -> float:
        return sum(r.rate_bits for r in self.per_user)


@dataclass
class IterationTrace:
    """Sweep-by-sweep diagnostics; ``converged_at`` is the sweep at which
    the relative-rate stopping rule fired (None if the budget ran out)."""

    per_iteration: list = field(default_factory=list)
    converged_at: int | None = None
    stop_reason: StopReason = StopReason.MAX_ITERATIONS

    def sum_rates(self) -> np.ndarray:
        return np.array([rec.sum_rate_bits for rec in self.per_iteration])


@dataclass(frozen=True)
class FinalizedBeamformers:
    """Water-filled stacked precoder plus the untouched combiners."""

    stacked_precoder: np.ndarray
    combiners: list
    allocation: PowerAllocation

    def precoder_blocks(self, n_streams: int) -> list:
        f = self.stacked_precoder
        return [f[:, u * n_streams:(u + 1) * n_streams]
                for u in range(f.shape[1] // n_streams)]


def initialize_combiners(config: SystemConfig, seed: int) -> list:
    """Random column-orthonormal first-stage combiners, one per user.

    User ``u`` draws from ``derive_seed(seed, u)``; orthonormalization keeps
    the first sweep's effective channels well conditioned.
    """
    combiners = []
    for u in range(config.n_users):
        rng = rng_from(derive_seed(seed, u))
        raw = complex_normal(rng, (config.n_rx, config.n_streams))
        q, _ = np.linalg.qr(raw)
        combiners.append(np.ascontiguousarray(q))
    return combiners


def _interferer_span(u: int, effective_channels, rank_tol_factor: float) -> OrthonormalBasis:
    others = [effective_channels[v].conj().T
              for v in range(len(effective_channels)) if v != u]
    width = effective_channels[u].shape[1]
    if not others:
        return OrthonormalBasis(np.zeros((width, 0), dtype=np.complex128), 0)
    return orthonormal_span(np.hstack(others), rank_tol_factor)


def _renull_deficient_columns(right: np.ndarray, keep: int,
                              basis: OrthonormalBasis) -> np.ndarray:
    # Right-singular vectors attached to (numerically) zero singular values
    # are an arbitrary completion and may leak into the interferers' span;
    # re-project them and re-orthonormalize so the nulling certificate holds
    # for every column. Columns that collapse are zeroed (zero-power stream).
    fixed = right.copy()
    for j in range(keep, right.shape[1]):
        col = fixed[:, j]
        if basis.rank:
            col = col - basis.matrix @ (basis.matrix.conj().T @ col)
        for _ in range(2):
            for i in range(j):
                col = col - fixed[:, i] * (fixed[:, i].conj() @ col)
        norm = np.linalg.norm(col)
        fixed[:, j] = col / norm if norm > 1e-8 else 0.0
    return fixed


def first_projection(u: int, effective_channels, tolerances: Tolerances):
    """Interference-nulling projection and dominant-subspace extraction.

    Returns ``(precoder, combiner_stage2, top_singulars)`` for user ``u``
    given the frozen list of all users' effective channels. The precoder is
    orthogonal to every interferer's effective channel by construction.
    Raises :class:`StreamsExceedNullity` (with the zero-power factors
    attached) when the interferers span the whole space.
    """
    n_streams = effective_channels[u].shape[0]
    basis = _interferer_span(u, effective_channels, tolerances.rank_tol_factor)
    residual_channel = project_complement(effective_channels[u], basis)
    tsvd = truncated_svd(residual_channel, n_streams)
    # rank of the projected channel is judged against the pre-projection
    # scale: components below that are projection roundoff, not signal
    scale = float(np.linalg.norm(effective_channels[u]))
    thresh = tolerances.rank_threshold(max(residual_channel.shape), scale)
    keep = int(np.count_nonzero(tsvd.singulars > thresh))
    right = tsvd.right
    if keep < n_streams:
        right = _renull_deficient_columns(right, keep, basis)
    singulars = tsvd.singulars.copy()
    singulars[keep:] = 0.0
    if keep == 0:
        raise StreamsExceedNullity(u, right, tsvd.left, singulars)
    return right, tsvd.left, singulars


def second_projection(u: int, channel: np.ndarray, precoder: np.ndarray,
                      combiner: np.ndarray, tolerances: Tolerances) -> np.ndarray:
    """Project the combiner onto the span of ``channel @ precoder``.

    Preserves the beamforming gain ``W^H H F`` exactly while never
    increasing the combiner norm.
    """
    basis = orthonormal_span(channel @ precoder, tolerances.rank_tol_factor)
    if basis.rank == 0:
        return np.zeros_like(combiner)
    return basis.matrix @ (basis.matrix.conj().T @ combiner)


def _orthonormal_stage1(w1: np.ndarray, n_streams: int, tolerances: Tolerances,
                        rng_seed: int) -> np.ndarray:
    # The stacked-stream water-filling gains are the singular values of the
    # effective channel, which presumes a unit-Gram combiner; the projected
    # combiner is therefore re-orthonormalized before the next sweep. Its
    # span (hence the whole iteration trajectory and every recorded rate)
    # is unchanged by this. Rank-deficient projections additionally get
    # random orthonormal padding so the next sweep stays well posed.
    span = orthonormal_span(w1, tolerances.rank_tol_factor)
    if span.rank >= n_streams:
        return np.linalg.qr(w1)[0]
    rng = rng_from(rng_seed)
    columns = [span.matrix]
    have = span.rank
    while have < n_streams:
        cand = complex_normal(rng, (w1.shape[0],))
        for block in columns:
            if block.shape[1]:
                cand = cand - block @ (block.conj().T @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-6:
            columns.append((cand / norm)[:, None])
            have += 1
    return np.hstack(columns)


def _pairwise_mui(channels, precoders, combiners) -> float:
    worst = 0.0
    h_norms = [np.linalg.norm(h) for h in channels]
    for v, w in enumerate(combiners):
        w_norm = np.linalg.norm(w)
        wh_h = w.conj().T @ channels[v]
        for u, f in enumerate(precoders):
            if u == v:
                continue
            denom = w_norm * h_norms[v] * np.linalg.norm(f)
            if denom == 0.0:
                continue
            worst = max(worst, float(np.linalg.norm(wh_h @ f)) / denom)
    return worst


def run_dop(channels, config: SystemConfig, tolerances: Tolerances | None = None,
            seed: int = 0, initial_combiners=None) -> tuple[BeamformerSet, IterationTrace]:
    """Run the full projection iteration on one channel realization.

    Per sweep: freeze all effective channels, run the two projections for
    every user (the refined first-stage combiner only takes effect next
    sweep), record per-user diagnostics under uniform power, and stop once
    the total rate changes by less than ``convergence_rel_tol`` relative or
    ``max_iterations`` is hit. A vanished interference-free subspace for
    some user is recorded in the trace and the run continues with that
    user's streams at zero power.
    """
    tol = tolerances if tolerances is not None else Tolerances()
    mats = channels.channels if hasattr(channels, "channels") else list(channels)
    n_users = config.n_users
    if len(mats) != n_users:
        raise ValueError(f"expected {n_users} channel matrices, got {len(mats)}")
    ns = config.n_streams
    stage1 = (list(initial_combiners) if initial_combiners is not None
              else initialize_combiners(config, seed))

    trace = IterationTrace()
    beamformers = None
    previous_sum = None
    for sweep in range(1, tol.max_iterations + 1):
        effective = [stage1[u].conj().T @ mats[u] for u in range(n_users)]
        stage1_used = list(stage1)
        precoders, stage2, combiners = [], [], []
        singulars = np.zeros((n_users, ns))
        nullity_users = []
        for u in range(n_users):
            try:
                f_u, w2_u, s_u = first_projection(u, effective, tol)
            except StreamsExceedNullity as exc:
                nullity_users.append(u)
                f_u, w2_u, s_u = exc.precoder, exc.combiner_stage2, exc.singulars
            w_u = stage1_used[u] @ w2_u
            precoders.append(f_u)
            stage2.append(w2_u)
            combiners.append(w_u)
            singulars[u] = s_u
            refined = second_projection(u, mats[u], f_u, w_u, tol)
            stage1[u] = _orthonormal_stage1(refined, ns, tol,
                                            derive_seed(seed, 0x5747, sweep, u))
        reports = [link_report(u, mats, precoders, combiners, config)
                   for u in range(n_users)]
        trace.per_iteration.append(IterationRecord(
            iteration=sweep, per_user=reports,
            mui_certificate=_pairwise_mui(mats, precoders, combiners),
            nullity_users=tuple(nullity_users)))
        beamformers = BeamformerSet(precoders=precoders, combiners=combiners,
                                    combiner_stage1=stage1_used,
                                    combiner_stage2=stage2,
                                    top_singulars=singulars)
        current_sum = trace.per_iteration[-1].sum_rate_bits
        if previous_sum is not None and \
                abs(current_sum - previous_sum) <= tol.convergence_rel_tol * previous_sum:
            trace.converged_at = sweep
            trace.stop_reason = StopReason.RELATIVE_RATE_TOLERANCE
            break
        previous_sum = current_sum
    return beamformers, trace


def finalize(beamformers: BeamformerSet, config: SystemConfig,
             tolerances: Tolerances | None = None) -> FinalizedBeamformers:
    """Water-fill the stacked streams and scale the precoder columns.

    Stream gains are the SNR-scaled squared singular values
    ``(P / (U * Ns * noise)) * sigma_k^2`` in user order; singular values
    below the rank threshold are excluded and get zero power. The combiners
    are returned unchanged.
    """
    tol = tolerances if tolerances is not None else Tolerances()
    sigma = np.concatenate([np.asarray(s, dtype=np.float64)
                            for s in beamformers.top_singulars])
    n_tx = beamformers.precoders[0].shape[0]
    scale = config.total_power / (config.n_users * config.n_streams
                                  * config.noise_power)
    active = sigma > tol.rank_threshold(n_tx, float(sigma.max(initial=0.0)))
    gains = scale * sigma * sigma
    levels = np.zeros(sigma.size)
    partial = waterfill(gains[active], float(config.n_users * config.n_streams))
    levels[active] = partial.levels
    allocation = PowerAllocation(levels=levels, water_level=partial.water_level,
                                 effective_gains=gains)
    stacked = apply_allocation(beamformers.precoders, allocation)
    return FinalizedBeamformers(stacked_precoder=stacked,
                                combiners=list(beamformers.combiners),
                                allocation=allocation)
