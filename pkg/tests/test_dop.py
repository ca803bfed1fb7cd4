import numpy as np
import pytest

import dopbeam as db
from dopbeam.config import SystemConfig, Tolerances, make_config
from dopbeam.dop import (finalize, first_projection, initialize_combiners,
                         run_dop, second_projection)
from dopbeam.errors import StreamsExceedNullity
from dopbeam.metrics import sum_rate
from dopbeam.seeding import complex_normal, rng_from

from conftest import gaussian_channels

TOL = Tolerances()


def test_initialize_combiners_deterministic_and_orthonormal():
    cfg = make_config(10.0, 16, 4, 3, 2)
    a = initialize_combiners(cfg, 7)
    b = initialize_combiners(cfg, 7)
    for wa, wb in zip(a, b):
        assert np.array_equal(wa, wb)
        assert np.allclose(wa.conj().T @ wa, np.eye(2), atol=1e-10)


def test_initialize_combiners_square_case_is_unitary():
    cfg = make_config(10.0, 16, 4, 2, 4, n_rf_rx=4)
    w = initialize_combiners(cfg, 3)[0]
    assert np.allclose(w @ w.conj().T, np.eye(4), atol=1e-10)


def test_first_projection_single_user_reduces_to_svd():
    rng = rng_from(1)
    eff = [complex_normal(rng, (2, 10))]
    f, w2, s = first_projection(0, eff, TOL)
    u_ref, s_ref, vh_ref = np.linalg.svd(eff[0], full_matrices=False)
    assert np.allclose(s, s_ref[:2], rtol=1e-12)
    # same dominant subspace regardless of phase fixing
    overlap = np.abs(f.conj().T @ vh_ref[:2].conj().T)
    assert np.allclose(np.sort(np.diag(overlap)), [1.0, 1.0], atol=1e-10)


def test_first_projection_orthogonal_interferers_is_identity():
    # rows of each user's effective channel live on disjoint coordinates
    eff = [np.zeros((1, 6), dtype=complex) for _ in range(2)]
    eff[0][0, :3] = [1.0, 2.0, 0.5]
    eff[1][0, 3:] = [1.0, -1.0, 2.0]
    f, w2, s = first_projection(0, eff, TOL)
    assert np.abs(eff[1] @ f).max() < 1e-12
    assert s[0] == pytest.approx(np.linalg.norm(eff[0]), rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_first_projection_nulling_certificate_tight_geometry(seed):
    # U*Ns equals the transmit dimension: classic null-space methods fail here
    rng = rng_from(20 + seed)
    eff = [complex_normal(rng, (2, 6)) for _ in range(3)]
    for u in range(3):
        f, _, _ = first_projection(u, eff, TOL)
        for v in range(3):
            if v != u:
                ratio = np.linalg.norm(eff[v] @ f) / (np.linalg.norm(eff[v]) * np.linalg.norm(f))
                assert ratio < 1e-10


def test_first_projection_raises_when_interferers_fill_space():
    rng = rng_from(5)
    eff = [complex_normal(rng, (2, 4)) for _ in range(3)]  # 4 interferer rows in 4 dims
    with pytest.raises(StreamsExceedNullity) as err:
        first_projection(0, eff, TOL)
    assert np.all(err.value.singulars == 0.0)


def test_second_projection_fixes_vectors_in_span():
    rng = rng_from(6)
    h = complex_normal(rng, (8, 10))
    f = np.linalg.qr(complex_normal(rng, (10, 2)))[0]
    span = h @ f
    w_inside = span @ complex_normal(rng, (2, 2))
    out = second_projection(0, h, f, w_inside, TOL)
    assert np.allclose(out, w_inside, atol=1e-10)


def test_second_projection_annihilates_orthogonal_combiner():
    h = np.zeros((4, 4), dtype=complex)
    h[0, 0] = 1.0
    f = np.eye(4, dtype=complex)[:, :1]
    w = np.array([[0.0], [1.0], [0.0], [0.0]], dtype=complex)  # orthogonal to h@f
    out = second_projection(0, h, f, w, TOL)
    assert np.all(out == 0.0)


@pytest.mark.parametrize("seed", range(4))
def test_second_projection_certificates(seed):
    rng = rng_from(30 + seed)
    h = complex_normal(rng, (8, 12))
    f = np.linalg.qr(complex_normal(rng, (12, 2)))[0]
    w = complex_normal(rng, (8, 2))
    out = second_projection(0, h, f, w, TOL)
    assert np.abs(out.conj().T @ h @ f - w.conj().T @ h @ f).max() < 1e-10
    assert np.linalg.norm(out) <= np.linalg.norm(w) + 1e-12


def test_run_dop_single_user_rank_limited_channel_matches_eigen_oracle():
    cfg = make_config(10.0, 64, 16, 1, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(n_clusters=1, n_rays=2, seed=31))
    bf, trace = run_dop(cs, cfg, seed=5)
    fin = finalize(bf, cfg)
    rate = sum_rate(cs, fin.precoder_blocks(2), fin.combiners, cfg)
    u, s, vh = np.linalg.svd(cs.channels[0])
    gains = cfg.total_power / (2 * cfg.noise_power) * s[:2] ** 2
    alloc = db.waterfill(gains, 2.0)
    oracle = sum_rate(cs, [vh[:2].conj().T * np.sqrt(alloc.levels)], [u[:, :2]], cfg)
    assert rate == pytest.approx(oracle, rel=1e-9)
    assert trace.converged_at is not None and trace.converged_at <= 3


def test_run_dop_mui_nulled_after_every_sweep():
    cfg = make_config(10.0, 64, 16, 4, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=7))
    bf, trace = run_dop(cs, cfg, seed=3)
    assert all(rec.mui_certificate < 1e-10 for rec in trace.per_iteration)
    for rec in trace.per_iteration:
        for rep in rec.per_user:
            assert rep.mui_power < 1e-10 * max(rep.signal_power, 1e-30)


def test_run_dop_noise_power_never_increases():
    cfg = make_config(10.0, 64, 16, 4, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=8))
    _, trace = run_dop(cs, cfg, seed=2)
    for u in range(4):
        noise = np.array([rec.per_user[u].noise_power for rec in trace.per_iteration])
        assert np.all(np.diff(noise) <= 1e-9 * np.maximum(noise[:-1], 1.0))


def test_run_dop_is_bitwise_deterministic():
    cfg = make_config(10.0, 16, 4, 2, 1)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=9))
    a, _ = run_dop(cs, cfg, seed=4)
    b, _ = run_dop(cs, cfg, seed=4)
    for fa, fb in zip(a.precoders, b.precoders):
        assert np.array_equal(fa, fb)
    for wa, wb in zip(a.combiners, b.combiners):
        assert np.array_equal(wa, wb)


def test_run_dop_beamformer_set_invariants():
    cfg = make_config(10.0, 16, 4, 2, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=10))
    bf, _ = run_dop(cs, cfg, seed=1)
    for u in range(2):
        f, w2 = bf.precoders[u], bf.combiner_stage2[u]
        assert np.allclose(f.conj().T @ f, np.eye(2), atol=1e-10)
        assert np.allclose(w2.conj().T @ w2, np.eye(2), atol=1e-10)
        rebuilt = bf.combiner_stage1[u] @ w2
        assert np.abs(rebuilt - bf.combiners[u]).max() < 1e-12


def test_run_dop_permutation_equivariance():
    cfg = make_config(10.0, 16, 4, 3, 1)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=11))
    inits = initialize_combiners(cfg, 21)
    _, trace_a = run_dop(cs, cfg, seed=0, initial_combiners=inits)
    perm = [2, 0, 1]
    permuted = [cs.channels[p] for p in perm]
    _, trace_b = run_dop(permuted, cfg, seed=0,
                         initial_combiners=[inits[p] for p in perm])
    last_a = trace_a.per_iteration[-1]
    last_b = trace_b.per_iteration[-1]
    for pos, p in enumerate(perm):
        assert last_b.per_user[pos].rate_bits == \
            pytest.approx(last_a.per_user[p].rate_bits, rel=1e-9)


def test_run_dop_bounded_by_dpc_every_sweep():
    cfg = make_config(10.0, 16, 4, 2, 1)
    for seed in range(3):
        cs = db.generate_channel_set(cfg, db.ChannelParams(seed=60 + seed))
        _, trace = run_dop(cs, cfg, seed=seed)
        ceiling = db.dpc_sum_capacity(cs, cfg)
        assert all(rec.sum_rate_bits <= ceiling + 1e-6 for rec in trace.per_iteration)


def test_run_dop_survives_vanishing_interference_free_space():
    # three 2-stream users in a 4-dim transmit space: nulling is impossible
    cfg = SystemConfig(n_tx=4, n_rx=4, n_users=3, n_streams=2, n_rf_tx=6,
                       n_rf_rx=2, total_power=10.0, noise_power=1.0, snr_db=10.0)
    cs = gaussian_channels(3, 4, 4, seed=13)
    bf, trace = run_dop(cs, cfg, seed=1)
    assert any(rec.nullity_users for rec in trace.per_iteration)
    assert np.all(np.concatenate(bf.top_singulars) == 0.0)


def test_finalize_power_constraint_and_allocation():
    cfg = make_config(10.0, 64, 16, 4, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=14))
    bf, _ = run_dop(cs, cfg, seed=3)
    fin = finalize(bf, cfg)
    assert np.linalg.norm(fin.stacked_precoder) ** 2 == pytest.approx(8.0, abs=1e-9)
    assert fin.allocation.levels.sum() == pytest.approx(8.0, rel=1e-12)
    # combiners pass through untouched
    for wa, wb in zip(fin.combiners, bf.combiners):
        assert np.array_equal(wa, wb)


def test_finalize_uniform_levels_for_identical_singulars():
    rng = rng_from(15)
    precs = [np.linalg.qr(complex_normal(rng, (8, 2)))[0] for _ in range(2)]
    combs = [np.linalg.qr(complex_normal(rng, (4, 2)))[0] for _ in range(2)]
    bf = db.BeamformerSet(precoders=precs, combiners=combs,
                          combiner_stage1=combs,
                          combiner_stage2=[np.eye(2, dtype=complex)] * 2,
                          top_singulars=np.full((2, 2), 3.0))
    cfg = make_config(10.0, 16, 4, 2, 2, n_rf_tx=8)
    fin = finalize(bf, cfg)
    assert np.allclose(fin.allocation.levels, 1.0, atol=1e-12)
    assert np.allclose(fin.stacked_precoder, np.hstack(precs), atol=1e-12)


def test_finalize_starves_zero_singular_user():
    rng = rng_from(16)
    precs = [np.linalg.qr(complex_normal(rng, (8, 2)))[0] for _ in range(2)]
    combs = [np.linalg.qr(complex_normal(rng, (4, 2)))[0] for _ in range(2)]
    sing = np.array([[3.0, 2.0], [1e-18, 0.0]])
    bf = db.BeamformerSet(precoders=precs, combiners=combs,
                          combiner_stage1=combs,
                          combiner_stage2=[np.eye(2, dtype=complex)] * 2,
                          top_singulars=sing)
    cfg = make_config(10.0, 16, 4, 2, 2, n_rf_tx=8)
    fin = finalize(bf, cfg)
    assert np.all(fin.allocation.levels[2:] == 0.0)
    assert fin.allocation.levels[:2].sum() == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_waterfilling_never_hurts_the_evaluated_rate(seed):
    cfg = make_config(10.0, 64, 16, 4, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=900 + seed))
    bf, trace = run_dop(cs, cfg, seed=seed)
    fin = finalize(bf, cfg)
    wf_rate = sum_rate(cs, fin.precoder_blocks(2), fin.combiners, cfg)
    uniform_rate = trace.per_iteration[-1].sum_rate_bits
    assert wf_rate >= uniform_rate - 1e-9 * uniform_rate


def test_run_dop_single_user_generic_channel_approaches_eigen_rate():
    # full-rank channel: the fixed point tracks dominant-subspace beamforming,
    # so the converged rate sits within the stopping tolerance of the oracle
    cfg = make_config(10.0, 64, 16, 1, 2)
    cs = db.generate_channel_set(cfg, db.ChannelParams(seed=77))
    bf, trace = run_dop(cs, cfg, seed=2)
    fin = finalize(bf, cfg)
    rate = sum_rate(cs, fin.precoder_blocks(2), fin.combiners, cfg)
    u, s, vh = np.linalg.svd(cs.channels[0])
    gains = cfg.total_power / (2 * cfg.noise_power) * s[:2] ** 2
    alloc = db.waterfill(gains, 2.0)
    oracle = sum_rate(cs, [vh[:2].conj().T * np.sqrt(alloc.levels)], [u[:, :2]], cfg)
    assert rate <= oracle + 1e-9
    assert rate == pytest.approx(oracle, rel=1e-3)
