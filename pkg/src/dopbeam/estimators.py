"""Scikit-learn style estimator facade over the functional core.

The estimators accept a stack of per-user complex channel matrices as
``X`` (shape ``(n_users, n_rx, n_tx)`` or an equivalent list), fit the
beamformers, and expose the fitted factors as trailing-underscore
attributes. ``get_params``/``set_params`` come from ``BaseEstimator`` so
instances clone and grid-search like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .baselines import bd_beamformers
from .channel import ChannelSet
from .config import Tolerances, make_config
from .dop import finalize, run_dop
from .hybrid import baseband_mui_cleanup, effective_mui_certificate, hybridize
from .metrics import sum_rate


def check_channels(X) -> ChannelSet:
    """Validate a stack of per-user channel matrices.

    Accepts a 3-d complex array ``(n_users, n_rx, n_tx)`` or a sequence of
    equally shaped 2-d matrices; rejects non-finite entries.
    """
    if isinstance(X, ChannelSet):
        mats = X.channels
    elif isinstance(X, (list, tuple)):
        mats = list(X)
    else:
        arr = np.asarray(X)
        if arr.ndim != 3:
            raise ValueError(f"expected (n_users, n_rx, n_tx) channels, got shape {arr.shape}")
        mats = [arr[u] for u in range(arr.shape[0])]
    cs = ChannelSet.from_matrices(mats)
    for u, h in enumerate(cs.channels):
        if not np.all(np.isfinite(h)):
            raise ValueError(f"channel matrix {u} contains non-finite entries")
    return cs


class _ChannelFitMixin:
    """Shared config assembly and fitted-state checks."""

    def _config_for(self, channels: ChannelSet):
        n_users = channels.n_users
        n_rx, n_tx = channels.channels[0].shape
        return make_config(self.snr_db, n_tx, n_rx, n_users, self.n_streams,
                           self.n_rf_tx, self.n_rf_rx, self.noise_power,
                           require_square=False)

    def _tolerances(self):
        return Tolerances(max_iterations=self.max_iterations,
                          convergence_rel_tol=self.convergence_rel_tol)

    def _check_fitted(self):
        if getattr(self, "config_", None) is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")


class DualProjectionBeamformer(BaseEstimator, _ChannelFitMixin):
    """Multiuser beamformer fitted by iterative dual orthogonal projections.

    Parameters
    ----------
    n_streams : data streams per user.
    snr_db : total-power-to-noise ratio in dB (noise power below).
    noise_power : receiver noise power, linear.
    n_rf_tx, n_rf_rx : RF chain counts; default minimal feasible values.
    max_iterations, convergence_rel_tol : sweep budget and early-exit
        threshold on the relative total-rate change.
    random_state : seed for the random combiner initialization.

    Attributes
    ----------
    precoders_, combiners_ : per-user fitted factors.
    stacked_precoder_ : water-filled wide precoder.
    power_allocation_ : stream power levels and water level.
    trace_ : per-iteration diagnostics; ``converged_at_`` its exit sweep.
    sum_rate_ : water-filled total spectral efficiency on the fit channels.
    """

    def __init__(self, n_streams=2, snr_db=10.0, noise_power=1.0, n_rf_tx=None,
                 n_rf_rx=None, max_iterations=20, convergence_rel_tol=1e-6,
                 random_state=0):
        self.n_streams = n_streams
        self.snr_db = snr_db
        self.noise_power = noise_power
        self.n_rf_tx = n_rf_tx
        self.n_rf_rx = n_rf_rx
        self.max_iterations = max_iterations
        self.convergence_rel_tol = convergence_rel_tol
        self.random_state = random_state

    def fit(self, X, y=None):
        channels = check_channels(X)
        config = self._config_for(channels)
        beamformers, trace = run_dop(channels, config, self._tolerances(),
                                     seed=self.random_state)
        final = finalize(beamformers, config)
        self.config_ = config
        self.beamformers_ = beamformers
        self.precoders_ = final.precoder_blocks(config.n_streams)
        self.combiners_ = final.combiners
        self.stacked_precoder_ = final.stacked_precoder
        self.power_allocation_ = final.allocation
        self.trace_ = trace
        self.converged_at_ = trace.converged_at
        self.sum_rate_ = sum_rate(channels, self.precoders_, self.combiners_, config)
        return self

    def score(self, X, y=None):
        """Water-filled sum rate of the fitted beamformers on ``X``."""
        self._check_fitted()
        channels = check_channels(X)
        return sum_rate(channels, self.precoders_, self.combiners_, self.config_)


class HybridDualProjectionBeamformer(BaseEstimator, _ChannelFitMixin):
    """Constant-modulus hybrid variant of :class:`DualProjectionBeamformer`.

    Fits the digital solution, factors it into analog/baseband stages and
    re-nulls the residual interference in baseband. Additional attributes:
    ``analog_precoder_``, ``baseband_precoder_``, ``analog_combiners_``,
    ``baseband_combiners_``, ``mui_certificate_``, ``digital_sum_rate_``.
    """

    def __init__(self, n_streams=2, snr_db=10.0, noise_power=1.0, n_rf_tx=None,
                 n_rf_rx=None, max_iterations=20, convergence_rel_tol=1e-6,
                 altmin_max_iter=50, altmin_tol=1e-8, random_state=0):
        self.n_streams = n_streams
        self.snr_db = snr_db
        self.noise_power = noise_power
        self.n_rf_tx = n_rf_tx
        self.n_rf_rx = n_rf_rx
        self.max_iterations = max_iterations
        self.convergence_rel_tol = convergence_rel_tol
        self.altmin_max_iter = altmin_max_iter
        self.altmin_tol = altmin_tol
        self.random_state = random_state

    def fit(self, X, y=None):
        channels = check_channels(X)
        config = self._config_for(channels)
        beamformers, trace = run_dop(channels, config, self._tolerances(),
                                     seed=self.random_state)
        final = finalize(beamformers, config)
        hyb = hybridize(final.stacked_precoder, final.combiners, config,
                        altmin_max_iter=self.altmin_max_iter,
                        altmin_tol=self.altmin_tol)
        hyb = baseband_mui_cleanup(hyb, channels, config)
        self.config_ = config
        self.trace_ = trace
        self.analog_precoder_ = hyb.analog_precoder
        self.baseband_precoder_ = hyb.baseband_precoder
        self.analog_combiners_ = hyb.analog_combiners
        self.baseband_combiners_ = hyb.baseband_combiners
        self.precoders_ = hyb.effective_precoders(config.n_streams)
        self.combiners_ = hyb.effective_combiners()
        self.mui_certificate_ = effective_mui_certificate(hyb, channels, config)
        self.digital_sum_rate_ = sum_rate(channels,
                                          final.precoder_blocks(config.n_streams),
                                          final.combiners, config)
        self.sum_rate_ = sum_rate(channels, self.precoders_, self.combiners_, config)
        return self

    def score(self, X, y=None):
        self._check_fitted()
        channels = check_channels(X)
        return sum_rate(channels, self.precoders_, self.combiners_, self.config_)


class BlockDiagonalizationBeamformer(BaseEstimator, _ChannelFitMixin):
    """Classic full-channel null-space baseline with the same interface.

    ``feasible_`` is False (and the rate attributes are None) when the
    stacked interferers leave fewer than ``n_streams`` null dimensions.
    """

    def __init__(self, n_streams=2, snr_db=10.0, noise_power=1.0, n_rf_tx=None,
                 n_rf_rx=None):
        self.n_streams = n_streams
        self.snr_db = snr_db
        self.noise_power = noise_power
        self.n_rf_tx = n_rf_tx
        self.n_rf_rx = n_rf_rx

    def fit(self, X, y=None):
        channels = check_channels(X)
        config = self._config_for(channels)
        bset, feasible = bd_beamformers(channels, config)
        self.config_ = config
        self.feasible_ = feasible
        if feasible:
            final = finalize(bset, config)
            self.precoders_ = final.precoder_blocks(config.n_streams)
            self.combiners_ = final.combiners
            self.sum_rate_ = sum_rate(channels, self.precoders_, self.combiners_,
                                      config)
        else:
            self.precoders_ = None
            self.combiners_ = None
            self.sum_rate_ = None
        return self

    def score(self, X, y=None):
        self._check_fitted()
        if not self.feasible_:
            raise NotFittedError("block diagonalization was infeasible for the fit geometry")
        channels = check_channels(X)
        return sum_rate(channels, self.precoders_, self.combiners_, self.config_)
