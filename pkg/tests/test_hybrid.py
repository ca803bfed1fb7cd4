import numpy as np
import pytest

import dopbeam as db
from dopbeam.channel import steering_vector
from dopbeam.config import SystemConfig, make_config
from dopbeam.dop import finalize, run_dop
from dopbeam.hybrid import (baseband_mui_cleanup, effective_mui_certificate,
                            hybridize, phase_extraction_altmin)
from dopbeam.metrics import sum_rate
from dopbeam.seeding import complex_normal, rng_from

from conftest import gaussian_channels


def test_altmin_constant_modulus_column_is_exact():
    target = 0.25 * np.ones((16, 1), dtype=complex)
    out = phase_extraction_altmin(target, 1, 0.25)
    assert out.residual < 1e-12
    assert np.allclose(out.analog, target, atol=1e-12)


def test_altmin_steering_column_is_exact():
    target = steering_vector(0.6, 0.9, 16)[:, None]
    out = phase_extraction_altmin(target, 1, 1.0 / 4.0)
    assert out.residual < 1e-12


def test_altmin_residuals_non_increasing():
    target = complex_normal(rng_from(1), (16, 4))
    out = phase_extraction_altmin(target, 8, 1.0 / 4.0)
    assert np.all(np.diff(out.residuals) <= 1e-12)
    assert out.residual == out.residuals[-1]


def test_altmin_modulus_exact_for_every_entry():
    target = complex_normal(rng_from(2), (9, 3))
    out = phase_extraction_altmin(target, 5, 1.0 / 3.0)
    assert np.allclose(np.abs(out.analog), 1.0 / 3.0, atol=1e-15)


def test_altmin_more_chains_reduce_error():
    medians = {}
    for n_rf in (8, 16):
        residuals = []
        for s in range(100):
            target = complex_normal(rng_from(500 + s), (36, 8))
            residuals.append(phase_extraction_altmin(target, n_rf, 1.0 / 6.0).residual)
        medians[n_rf] = np.median(residuals)
    assert medians[16] < medians[8]


def _fitted_pipeline(n_rf_tx=8, n_rf_rx=2, seed=9):
    cfg = make_config(10.0, 64, 16, 4, 2, n_rf_tx=n_rf_tx, n_rf_rx=n_rf_rx)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=seed))
    bf, _ = run_dop(cs, cfg, seed=5)
    fin = finalize(bf, cfg)
    return cfg, cs, fin


def test_hybridize_invariants():
    cfg, cs, fin = _fitted_pipeline()
    hyb = hybridize(fin.stacked_precoder, fin.combiners, cfg)
    assert np.allclose(np.abs(hyb.analog_precoder), 1 / 8.0, atol=1e-15)
    for w_rf in hyb.analog_combiners:
        assert np.allclose(np.abs(w_rf), 1 / 4.0, atol=1e-15)
    power = np.linalg.norm(hyb.analog_precoder @ hyb.baseband_precoder) ** 2
    assert power == pytest.approx(8.0, abs=1e-9)


def test_hybridize_exact_when_targets_are_steering_columns():
    cfg = make_config(10.0, 64, 16, 4, 2, n_rf_tx=8, n_rf_rx=2)
    rng = rng_from(3)
    cols = [steering_vector(a, e, 64)
            for a, e in zip(rng.uniform(-1.5, 1.5, 8), rng.uniform(-0.7, 0.7, 8))]
    f_opt = np.column_stack(cols)
    out = phase_extraction_altmin(f_opt, 8, 1 / 8.0)
    assert out.residual < 1e-12


def test_cleanup_restores_exact_nulling():
    cfg, cs, fin = _fitted_pipeline()
    hyb = hybridize(fin.stacked_precoder, fin.combiners, cfg)
    pre = effective_mui_certificate(hyb, cs, cfg)
    cleaned = baseband_mui_cleanup(hyb, cs, cfg)
    post = effective_mui_certificate(cleaned, cs, cfg)
    assert pre > 1e-6          # approximation error really leaks interference
    assert post < 1e-10
    power = np.linalg.norm(cleaned.analog_precoder @ cleaned.baseband_precoder) ** 2
    assert power == pytest.approx(8.0, abs=1e-9)


def test_cleanup_skips_exactly_representable_solutions():
    # with as many RF chains as antennas the factorization is exact, there is
    # no interference to clean, and the solution must pass through unchanged
    cfg, cs, fin = _fitted_pipeline(n_rf_tx=64, n_rf_rx=16)
    hyb = hybridize(fin.stacked_precoder, fin.combiners, cfg)
    residual = np.linalg.norm(fin.stacked_precoder
                              - hyb.analog_precoder @ hyb.baseband_precoder)
    assert residual < 1e-9
    digital = sum_rate(cs, fin.precoder_blocks(2), fin.combiners, cfg)
    cleaned = baseband_mui_cleanup(hyb, cs, cfg)
    post = sum_rate(cs, cleaned.effective_precoders(2),
                    cleaned.effective_combiners(), cfg)
    pre = sum_rate(cs, hyb.effective_precoders(2), hyb.effective_combiners(), cfg)
    assert pre == pytest.approx(digital, rel=1e-9)
    assert post == pytest.approx(pre, rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_hybrid_rate_bounded_by_digital(seed):
    cfg, cs, fin = _fitted_pipeline(seed=100 + seed)
    digital = sum_rate(cs, fin.precoder_blocks(2), fin.combiners, cfg)
    hyb = baseband_mui_cleanup(hybridize(fin.stacked_precoder, fin.combiners, cfg),
                               cs, cfg)
    hybrid = sum_rate(cs, hyb.effective_precoders(2), hyb.effective_combiners(), cfg)
    assert hybrid <= digital + 1e-9


def test_cleanup_reports_overloaded_rf_space():
    # four 2-stream users behind 6 RF chains: interferers fill the RF space
    cfg = SystemConfig(n_tx=64, n_rx=16, n_users=4, n_streams=2, n_rf_tx=6,
                       n_rf_rx=2, total_power=10.0, noise_power=1.0, snr_db=10.0)
    cs = gaussian_channels(4, 16, 64, seed=17)
    rng = rng_from(18)
    f_opt = complex_normal(rng, (64, 8))
    f_opt *= np.sqrt(8) / np.linalg.norm(f_opt)
    w_opts = [complex_normal(rng, (16, 2)) for _ in range(4)]
    hyb = hybridize(f_opt, w_opts, cfg)
    with pytest.warns(RuntimeWarning):
        baseband_mui_cleanup(hyb, cs, cfg)
