import pytest

from dopbeam.config import SystemConfig, Tolerances, make_config
from dopbeam.errors import InfeasibleConfig, NotSquare
from dopbeam.seeding import derive_seed


def test_snr_zero_db_gives_unit_power():
    cfg = make_config(0.0, 16, 4, 2, 1, noise_power=1.0)
    assert cfg.total_power == pytest.approx(1.0)


def test_snr_ten_db_gives_power_ten():
    cfg = make_config(10.0, 16, 4, 2, 1, noise_power=1.0)
    assert cfg.total_power == pytest.approx(10.0)


def test_published_figure_dimensions_are_valid():
    cfg = make_config(10.0, 256, 64, 6, 4, n_rf_tx=24, n_rf_rx=4)
    assert cfg.n_rf_tx == 24 and cfg.n_rf_rx == 4


def test_rf_chain_defaults():
    cfg = make_config(0.0, 64, 16, 4, 2)
    assert cfg.n_rf_tx == 8 and cfg.n_rf_rx == 2


def test_snr_round_trip_from_stored_powers():
    for snr in (-12.5, 0.0, 3.7, 20.0):
        cfg = make_config(snr, 16, 4, 2, 1, noise_power=2.5)
        import math
        back = 10.0 * math.log10(cfg.total_power / cfg.noise_power)
        assert back == pytest.approx(snr, rel=1e-12, abs=1e-12)


def test_make_config_is_deterministic():
    a = make_config(5.0, 64, 16, 4, 2)
    b = make_config(5.0, 64, 16, 4, 2)
    assert a == b


@pytest.mark.parametrize("kwargs", [
    dict(n_users=5, n_streams=2, n_rf_tx=8),   # U*Ns > n_rf_tx
    dict(n_rf_tx=100),                          # n_rf_tx > n_tx
    dict(n_streams=3, n_rf_rx=2, n_rf_tx=12),   # Ns > n_rf_rx
    dict(n_rf_rx=20),                           # n_rf_rx > n_rx
])
def test_feasibility_chain_violations(kwargs):
    base = dict(snr_db=0.0, n_tx=64, n_rx=16, n_users=4, n_streams=2)
    base.update(kwargs)
    with pytest.raises(InfeasibleConfig):
        make_config(**base)


def test_non_square_antenna_counts_rejected():
    with pytest.raises(NotSquare):
        make_config(0.0, 6, 4, 1, 1)
    with pytest.raises(NotSquare):
        make_config(0.0, 16, 10, 1, 1)


def test_require_square_false_allows_synthetic_geometries():
    cfg = make_config(0.0, 6, 4, 3, 2, require_square=False)
    assert isinstance(cfg, SystemConfig)
    assert cfg.n_tx == 6


def test_tolerances_defaults_and_validation():
    tol = Tolerances()
    assert tol.max_iterations == 20
    assert tol.convergence_rel_tol == 1e-6
    with pytest.raises(ValueError):
        Tolerances(rank_tol_factor=0.0)
    with pytest.raises(ValueError):
        Tolerances(max_iterations=0)


def test_derive_seed_is_stable_and_spreads():
    # frozen regression values: the mixing chain is a compatibility contract
    assert derive_seed(0) == derive_seed(0)
    assert derive_seed(1, 2) != derive_seed(1, 3)
    assert derive_seed(1, 2) != derive_seed(2, 1)
    seen = {derive_seed(42, i) for i in range(1000)}
    assert len(seen) == 1000
