"""Constant-modulus hybrid factorization of the fully-digital solution.

The analog stages are fitted by phase-extraction alternating minimization
(least-squares baseband step, phase-only analog step), then a single
interference-nulling pass over the RF-reduced effective channels restores
exact multiuser-interference cancellation that the approximation error broke.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, Tolerances
from .errors import StreamsExceedNullity
from .dop import first_projection

DEFAULT_ALTMIN_MAX_ITER = 50
DEFAULT_ALTMIN_TOL = 1e-8


@dataclass
class HybridBeamformerSet:
    """Analog (constant-modulus) and baseband stages for all users.

    ``baseband_precoder`` holds the per-user blocks side by side; the
    effective per-user precoder is ``analog_precoder @ block`` and the
    effective combiner is ``analog_combiners[u] @ baseband_combiners[u]``.
    """

    analog_precoder: np.ndarray
    baseband_precoder: np.ndarray
    analog_combiners: list
    baseband_combiners: list

    def effective_precoders(self, n_streams: int) -> list:
        full = self.analog_precoder @ self.baseband_precoder
        return [full[:, u * n_streams:(u + 1) * n_streams]
                for u in range(full.shape[1] // n_streams)]

    def effective_combiners(self) -> list:
        return [rf @ bb for rf, bb in zip(self.analog_combiners,
                                          self.baseband_combiners)]


@dataclass(frozen=True)
class PhaseExtraction:
    """Best iterate of one alternating-minimization run.

    ``residuals`` is the recorded approximation-error history; it is
    non-increasing by construction (non-improving iterates are discarded).
    """

    analog: np.ndarray
    baseband: np.ndarray
    residual: float
    residuals: np.ndarray


def phase_extraction_altmin(target: np.ndarray, n_rf: int, modulus: float,
                            max_iter: int = DEFAULT_ALTMIN_MAX_ITER,
                            tol: float = DEFAULT_ALTMIN_TOL) -> PhaseExtraction:
    """Approximate ``target ~= analog @ baseband`` with |analog entries| fixed.

    The analog factor is seeded from the phases of the target columns
    (cycled when ``n_rf`` exceeds the column count), keeping the whole run
    deterministic. Alternates a minimum-norm least-squares baseband solve
    with a phase-only analog update; iterates that do not reduce the
    residual terminate the loop, so the best pair is always returned.
    """
    target = np.asarray(target, dtype=np.complex128)
    rows, cols = target.shape
    phases = np.angle(target[:, [j % cols for j in range(n_rf)]])
    # Repeated cycles get distinct linear phase ramps, otherwise the analog
    # starting point is rank-deficient whenever n_rf exceeds the column count.
    cycles = np.arange(n_rf) // cols
    phases = phases + 2.0 * np.pi * np.outer(np.arange(rows), cycles) / rows
    analog = modulus * np.exp(1j * phases)
    baseband = np.linalg.lstsq(analog, target, rcond=None)[0]
    residual = float(np.linalg.norm(target - analog @ baseband))
    history = [residual]
    for _ in range(max_iter):
        cand_analog = modulus * np.exp(1j * np.angle(target @ baseband.conj().T))
        cand_baseband = np.linalg.lstsq(cand_analog, target, rcond=None)[0]
        cand_residual = float(np.linalg.norm(target - cand_analog @ cand_baseband))
        if cand_residual > residual:
            break
        improvement = residual - cand_residual
        analog, baseband, residual = cand_analog, cand_baseband, cand_residual
        history.append(residual)
        if residual == 0.0 or improvement < tol * max(residual, 1e-300):
            break
    return PhaseExtraction(analog=analog, baseband=baseband, residual=residual,
                           residuals=np.array(history))


def _rescale_power(analog: np.ndarray, baseband: np.ndarray,
                   budget: float) -> np.ndarray:
    norm = np.linalg.norm(analog @ baseband)
    if norm == 0.0:
        raise ValueError("analog/baseband product has zero norm; cannot meet the power constraint")
    return baseband * (np.sqrt(budget) / norm)


def hybridize(f_opt: np.ndarray, w_opts, config: SystemConfig,
              tolerances: Tolerances | None = None,
              altmin_max_iter: int = DEFAULT_ALTMIN_MAX_ITER,
              altmin_tol: float = DEFAULT_ALTMIN_TOL) -> HybridBeamformerSet:
    """Factor the digital solution into analog and baseband stages.

    The baseband precoder is rescaled so the transmit power constraint
    ``||F_RF F_BB||_F^2 == n_users * n_streams`` holds exactly.
    """
    del tolerances  # accepted for interface symmetry; altmin needs none
    pe = phase_extraction_altmin(f_opt, config.n_rf_tx, 1.0 / np.sqrt(config.n_tx),
                                 altmin_max_iter, altmin_tol)
    analog_combiners, baseband_combiners = [], []
    for w in w_opts:
        pw = phase_extraction_altmin(np.asarray(w, dtype=np.complex128),
                                     config.n_rf_rx, 1.0 / np.sqrt(config.n_rx),
                                     altmin_max_iter, altmin_tol)
        analog_combiners.append(pw.analog)
        baseband_combiners.append(pw.baseband)
    baseband = _rescale_power(pe.analog, pe.baseband,
                              float(config.n_users * config.n_streams))
    return HybridBeamformerSet(analog_precoder=pe.analog, baseband_precoder=baseband,
                               analog_combiners=analog_combiners,
                               baseband_combiners=baseband_combiners)


def baseband_mui_cleanup(hybrid: HybridBeamformerSet, channels,
                         config: SystemConfig,
                         tolerances: Tolerances | None = None) -> HybridBeamformerSet:
    """Re-null multiuser interference in the baseband stages.

    Forms the RF-reduced effective channels, runs the interference-nulling
    projection once per user (analog stages stay frozen), replaces the
    baseband precoder blocks, right-multiplies the baseband combiners by the
    stage-2 factors, and renormalizes the transmit power. After this pass
    the effective-channel interference is exactly zero for every user pair.

    Inputs whose interference certificate already meets the tolerance (an
    exactly representable fully-digital solution) are returned unchanged:
    re-deriving the baseband stages would only perturb a clean solution.
    """
    tol = tolerances if tolerances is not None else Tolerances()
    if effective_mui_certificate(hybrid, channels, config) < tol.mui_residual_tol:
        return HybridBeamformerSet(analog_precoder=hybrid.analog_precoder,
                                   baseband_precoder=hybrid.baseband_precoder,
                                   analog_combiners=list(hybrid.analog_combiners),
                                   baseband_combiners=list(hybrid.baseband_combiners))
    mats = channels.channels if hasattr(channels, "channels") else list(channels)
    ns = config.n_streams
    effective = [hybrid.baseband_combiners[u].conj().T
                 @ hybrid.analog_combiners[u].conj().T
                 @ mats[u] @ hybrid.analog_precoder
                 for u in range(config.n_users)]
    blocks, new_bb_combiners = [], []
    for u in range(config.n_users):
        try:
            f_u, w2_u, _ = first_projection(u, effective, tol)
        except StreamsExceedNullity as exc:
            warnings.warn(str(exc), RuntimeWarning, stacklevel=2)
            f_u, w2_u = exc.precoder, exc.combiner_stage2
        blocks.append(f_u)
        new_bb_combiners.append(hybrid.baseband_combiners[u] @ w2_u)
    baseband = np.hstack(blocks)
    if np.linalg.norm(hybrid.analog_precoder @ baseband) > 0.0:
        baseband = _rescale_power(hybrid.analog_precoder, baseband,
                                  float(config.n_users * ns))
    # all-zero baseband (every stream fell back to zero power) stays as is
    return HybridBeamformerSet(analog_precoder=hybrid.analog_precoder,
                               baseband_precoder=baseband,
                               analog_combiners=list(hybrid.analog_combiners),
                               baseband_combiners=new_bb_combiners)


def effective_mui_certificate(hybrid: HybridBeamformerSet, channels,
                              config: SystemConfig) -> float:
    """Worst normalized effective-channel interference over all user pairs."""
    mats = channels.channels if hasattr(channels, "channels") else list(channels)
    precoders = hybrid.effective_precoders(config.n_streams)
    combiners = hybrid.effective_combiners()
    worst = 0.0
    for v in range(config.n_users):
        wh_h = combiners[v].conj().T @ mats[v]
        scale_v = np.linalg.norm(combiners[v]) * np.linalg.norm(mats[v])
        for u in range(config.n_users):
            if u == v:
                continue
            denom = scale_v * np.linalg.norm(precoders[u])
            if denom == 0.0:
                continue
            worst = max(worst, float(np.linalg.norm(wh_h @ precoders[u])) / denom)
    return worst
