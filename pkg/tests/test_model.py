import numpy as np
import pytest

from core.exceptions import DimensionError, DomainError
from core.model import (ChannelBlock, NoiseModel, SymbolBlock, detect, make_constellation,
                        receive, sample_channel, sample_generic_symbols, sample_noise,
                        sample_symbols)


@pytest.mark.parametrize('order', [2, 4, 8, 16])
def test_constellation_unit_norm_and_sorted(order):
    constellation = make_constellation(order)
    np.testing.assert_allclose(np.abs(constellation.points), 1.0)
    angles = np.mod(np.angle(constellation.points), 2 * np.pi)
    np.testing.assert_allclose(angles, (2 * np.arange(order) + 1) * np.pi / order)


def test_half_angle():
    assert make_constellation(8).half_angle == pytest.approx(np.pi / 8)


def test_bpsk_points_are_plus_minus_j():
    np.testing.assert_allclose(make_constellation(2).points, [1j, -1j], atol=1e-15)


@pytest.mark.parametrize('order', [1, 3, 32])
def test_unsupported_order(order):
    with pytest.raises(DomainError):
        make_constellation(order)


@pytest.mark.parametrize('order', [2, 4, 8, 16])
def test_detect_constellation_points(order):
    constellation = make_constellation(order)
    np.testing.assert_array_equal(detect(constellation.points, constellation), np.arange(order))


def test_detect_boundaries_go_to_lower_index(psk8):
    assert detect(1j, psk8) == 1
    assert detect(-1, psk8) == 3
    assert detect(0, psk8) == 0
    assert isinstance(detect(1j, psk8), int)


def test_detect_is_scale_invariant(psk8, rng):
    y = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    np.testing.assert_array_equal(detect(y, psk8), detect(3.7 * y, psk8))


def test_detect_rejects_nan(psk8):
    with pytest.raises(DomainError):
        detect(np.array([1 + 1j, np.nan]), psk8)


def test_symbol_block_indices(psk8):
    block = SymbolBlock(psk8.points[np.array([[0, 7], [3, 5]])], psk8)
    np.testing.assert_array_equal(block.indices, [[0, 7], [3, 5]])
    assert block.num_users == 2
    assert block.block_length == 2
    with pytest.raises(ValueError):
        block.symbols[0, 0] = 1


def test_symbol_block_off_constellation(psk8):
    with pytest.raises(DomainError):
        SymbolBlock(np.array([[1.0 + 0j]]), psk8)


def test_channel_block_shape():
    with pytest.raises(DimensionError):
        ChannelBlock(np.ones(3))
    with pytest.raises(DomainError):
        ChannelBlock(np.array([[np.inf, 1]]))
    channel = ChannelBlock(np.ones((2, 3)))
    assert (channel.num_users, channel.num_antennas) == (2, 3)


def test_sample_channel_statistics():
    channel = sample_channel(np.random.default_rng(0), 200, 200)
    assert abs(np.mean(np.abs(channel.entries) ** 2) - 1) < 0.02
    with pytest.raises(DimensionError):
        sample_channel(np.random.default_rng(0), 0, 4)


def test_sample_symbols_on_constellation(rng, psk8):
    block = sample_symbols(rng, 4, 6, psk8)
    np.testing.assert_allclose(block.symbols, psk8.points[block.indices])


def test_generic_symbols_have_full_lifted_rank(rng):
    constellation = make_constellation(4)
    block = sample_generic_symbols(rng, 2, 3, constellation)
    s = block.symbols
    lifted = np.hstack([np.vstack([s.real, s.imag]), np.vstack([s.imag, -s.real])])
    assert np.linalg.matrix_rank(lifted) == 4


def test_noise_model():
    noise = NoiseModel.from_snr_db(10.0, 2.0)
    assert noise.variance == pytest.approx(0.2)
    assert noise.snr_db == pytest.approx(10.0)

    silent = NoiseModel.from_snr_db(np.inf)
    assert silent.variance == 0
    assert silent.snr_db == np.inf

    with pytest.raises(DomainError):
        NoiseModel(-1.0)
    with pytest.raises(DomainError):
        NoiseModel(1.0, 0.0)


def test_sample_noise_variance(rng):
    z = sample_noise(rng, (100000,), 0.5)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.5, rel=0.02)
    np.testing.assert_array_equal(sample_noise(rng, (3,), 0.0), 0)


def test_receive(rng, psk8):
    channel = sample_channel(rng, 2, 3)
    W = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    s = psk8.points[[1, 4]]
    np.testing.assert_allclose(receive(channel, W, s, np.zeros(2)), channel.entries @ W @ s)

    with pytest.raises(DimensionError):
        receive(channel, W.T, s, np.zeros(2))
    with pytest.raises(DimensionError):
        receive(channel, W, s, np.zeros(3))


def test_receive_superposition(rng, psk8):
    channel = sample_channel(rng, 3, 4)
    W = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    first, second = psk8.points[[0, 3, 6]], psk8.points[[2, 2, 7]]
    z1, z2 = sample_noise(rng, (3,), 0.1), sample_noise(rng, (3,), 0.1)
    a, b = 0.7 - 0.2j, -1.3

    combined = receive(channel, W, a * first + b * second, a * z1 + b * z2)
    np.testing.assert_allclose(combined, a * receive(channel, W, first, z1) + b * receive(channel, W, second, z2))


def test_sampling_is_reproducible(psk8):
    def draw(seed):
        rng = np.random.default_rng(seed)
        return sample_channel(rng, 4, 5), sample_symbols(rng, 4, 6, psk8), sample_noise(rng, (4, 6), 0.3)

    (h1, s1, z1), (h2, s2, z2) = draw(42), draw(42)
    np.testing.assert_array_equal(h1.entries, h2.entries)
    np.testing.assert_array_equal(s1.indices, s2.indices)
    np.testing.assert_array_equal(z1, z2)
    assert not np.array_equal(draw(43)[1].indices, s1.indices)


def test_psk8_symbols_are_uniform(psk8):
    draws = 80000
    block = sample_symbols(np.random.default_rng(5), 1, draws, psk8)
    counts = np.bincount(block.indices.ravel(), minlength=8)
    sigma = np.sqrt(draws * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - draws / 8) < 3 * sigma)
