import numpy as np
import pytest

from oracles import free_space_db, tgn_loss_db
from swiptsec.channel import (
    ChannelRealization,
    SystemConfig,
    gram_matrices,
    path_loss_db,
    path_loss_gain,
    sample_channels,
    small_scale,
)
from swiptsec.sdp import DomainError

F = 470e6


def test_path_loss_reference_distance():
    cfg = SystemConfig(antenna_gain=1.0)
    # frozen from the scalar free-space oracle
    assert path_loss_db(2.0, cfg) == pytest.approx(31.910340293877347, abs=1e-9)
    assert path_loss_gain(2.0, cfg) == pytest.approx(6.441187932484666e-4, rel=1e-9)
    assert path_loss_db(2.0, cfg) == pytest.approx(tgn_loss_db(2.0, F), abs=1e-12)


def test_path_loss_breakpoint_continuity():
    cfg = SystemConfig()
    assert path_loss_db(5.0, cfg) == pytest.approx(free_space_db(5.0, F), abs=1e-12)
    assert path_loss_db(5.0 + 1e-9, cfg) == pytest.approx(path_loss_db(5.0, cfg), abs=1e-6)


def test_path_loss_beyond_breakpoint():
    cfg = SystemConfig()
    assert path_loss_db(10.0, cfg) - free_space_db(5.0, F) == pytest.approx(10.536049848239344, abs=1e-9)


def test_path_loss_monotone():
    cfg = SystemConfig()
    d = np.linspace(2.0, 10.0, 401)
    assert np.all(np.diff(path_loss_gain(d, cfg)) <= 0)


def test_path_loss_below_reference_rejected():
    with pytest.raises(DomainError):
        path_loss_gain(1.0, SystemConfig())


def test_config_validation():
    with pytest.raises(DomainError):
        SystemConfig(num_antennas=1)
    with pytest.raises(DomainError):
        SystemConfig(conversion_efficiency=(0.5, 1.5))
    with pytest.raises(DomainError):
        SystemConfig(reference_distance=10.0, max_distance=2.0)
    with pytest.raises(DomainError):
        SystemConfig(noise_power=0.0)


def test_los_limit_has_no_randomness():
    rng = np.random.default_rng(0)
    v = small_scale(rng, 6, np.inf, 0.3)
    assert np.allclose(np.abs(v), 1.0)
    cfg = SystemConfig(rician_factor=np.inf)
    r = sample_channels(5, cfg)
    gains = path_loss_gain(np.array(r.distances), cfg)
    assert np.allclose(np.abs(r.h), np.sqrt(gains[0]))


def test_rayleigh_unit_power():
    rng = np.random.default_rng(1)
    p = [np.sum(np.abs(small_scale(rng, 6, 0.0, 0.0)) ** 2) for _ in range(10_000)]
    assert np.mean(p) / 6 == pytest.approx(1.0, abs=0.03)


def test_rician_unit_average_power():
    rng = np.random.default_rng(2)
    kappa = 10**0.3
    p = [np.sum(np.abs(small_scale(rng, 6, kappa, rng.uniform(-np.pi, np.pi))) ** 2) / 6 for _ in range(10_000)]
    assert 0.97 <= np.mean(p) <= 1.03


def test_sampling_deterministic():
    cfg = SystemConfig()
    a, b = sample_channels(11, cfg), sample_channels(11, cfg)
    assert a.h.tobytes() == b.h.tobytes()
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.g, b.g))
    assert a.distances == b.distances


def test_sampling_shapes_and_ranges():
    cfg = SystemConfig(num_receivers=4, conversion_efficiency=0.5)
    r = sample_channels(3, cfg)
    assert r.h.shape == (6,)
    assert len(r.g) == 3
    assert all(2.0 <= d <= 10.0 for d in r.distances)


def test_larger_k_extends_smaller_k():
    small = sample_channels(9, SystemConfig(num_receivers=3))
    big = sample_channels(9, SystemConfig(num_receivers=5, conversion_efficiency=0.5))
    assert np.array_equal(small.h, big.h)
    assert all(np.array_equal(x, y) for x, y in zip(small.g, big.g[:2]))


def test_gram_unit_vector():
    gs = gram_matrices(ChannelRealization(h=[1, 0], g=()))
    assert np.array_equal(gs.H, np.array([[1, 0], [0, 0]], dtype=complex))


def test_gram_complex_vector():
    gs = gram_matrices(ChannelRealization(h=np.array([1, 1j]) / np.sqrt(2), g=()))
    assert np.allclose(gs.H, [[0.5, -0.5j], [0.5j, 0.5]], atol=1e-15)
    assert np.trace(gs.H).real == pytest.approx(1.0)


def test_gram_rank_one_structure():
    r = sample_channels(4, SystemConfig())
    gs = gram_matrices(r)
    for M, v in [(gs.H, r.h)] + list(zip(gs.G, r.g)):
        assert np.max(np.abs(M - M.conj().T)) == 0.0
        ev = np.linalg.eigvalsh(M)
        assert ev[0] >= -1e-12
        assert ev[-1] == pytest.approx(np.linalg.norm(v) ** 2, rel=1e-12)
        assert np.all(np.abs(ev[:-1]) <= 1e-12 * ev[-1])


def test_realization_validation():
    with pytest.raises(DomainError):
        ChannelRealization(h=[1, 0], g=([1, 0, 0],))
    with pytest.raises(DomainError):
        ChannelRealization(h=[np.nan, 0], g=())
