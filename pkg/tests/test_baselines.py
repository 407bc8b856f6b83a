import numpy as np
import pytest

from core.baselines import ci_slp_precoder, rzf_precoder, zf_precoder
from core.ci_geometry import build_geometry
from core.exceptions import DimensionError, DomainError, PrecoderError
from core.model import ChannelBlock, SymbolBlock, detect, sample_channel, sample_symbols
from core.precoder import evaluate_alpha
from core.solvers import AdmmConfig, SolverSpec


def test_zf_identity_channel(rng, psk8):
    symbols = sample_symbols(rng, 3, 4, psk8)
    geometry = build_geometry(ChannelBlock(np.eye(3)), symbols)
    precoder = zf_precoder(geometry.channel, symbols, p0=2.0)

    np.testing.assert_allclose(precoder.w_complex, np.sqrt(2.0 / 3) * np.eye(3), atol=1e-12)
    alpha, _ = evaluate_alpha(geometry, precoder)
    np.testing.assert_allclose(alpha, np.sqrt(2.0 / 3))


def test_zf_removes_interference(rng, psk8):
    channel = sample_channel(rng, 3, 5)
    symbols = sample_symbols(rng, 3, 6, psk8)
    precoder = zf_precoder(channel, symbols)
    assert precoder.block_power == pytest.approx(6.0)
    y = channel.entries @ precoder.w_complex @ symbols.symbols
    np.testing.assert_array_equal(detect(y, psk8), symbols.indices)


def test_zf_needs_enough_antennas(rng, psk8):
    channel = sample_channel(rng, 4, 3)
    with pytest.raises(DimensionError):
        zf_precoder(channel, sample_symbols(rng, 4, 2, psk8))


def test_zf_rank_deficient_channel(rng, psk8):
    channel = ChannelBlock(np.ones((2, 2)))
    with pytest.raises(PrecoderError):
        zf_precoder(channel, sample_symbols(rng, 2, 2, psk8))


def test_rzf_without_noise_is_zf(rng, psk8):
    channel = sample_channel(rng, 3, 4)
    symbols = sample_symbols(rng, 3, 5, psk8)
    np.testing.assert_allclose(rzf_precoder(channel, symbols, sigma2=0.0).w_complex,
                               zf_precoder(channel, symbols).w_complex)
    with pytest.raises(DomainError):
        rzf_precoder(channel, symbols, sigma2=-1.0)


def test_rzf_power_normalized(rng, psk8):
    channel = sample_channel(rng, 3, 3)
    symbols = sample_symbols(rng, 3, 4, psk8)
    assert rzf_precoder(channel, symbols, p0=0.5, sigma2=0.1).block_power == pytest.approx(2.0)


def test_ci_slp_per_slot_power(rng, psk8):
    channel = sample_channel(rng, 4, 4)
    symbols = sample_symbols(rng, 4, 3, psk8)
    precoding = ci_slp_precoder(channel, symbols, p0=2.0)

    np.testing.assert_allclose(np.sum(np.abs(precoding.transmit) ** 2, axis=0), 2.0)
    assert np.all(precoding.min_alpha > 0)
    y = channel.entries @ precoding.transmit
    np.testing.assert_array_equal(detect(y, psk8), symbols.indices)


def test_ci_slp_beats_zf_per_slot(rng, psk8):
    channel = sample_channel(rng, 4, 4)
    symbols = sample_symbols(rng, 4, 3, psk8)
    precoding = ci_slp_precoder(channel, symbols)

    for n in range(3):
        slot = SymbolBlock(symbols.symbols[:, [n]], psk8)
        geometry = build_geometry(channel, slot)
        _, zf_margin = evaluate_alpha(geometry, zf_precoder(channel, slot))
        assert precoding.min_alpha[n] >= zf_margin - 1e-9


def test_ci_slp_with_admm(rng, psk8):
    channel = sample_channel(rng, 3, 3)
    symbols = sample_symbols(rng, 3, 2, psk8)
    solver = SolverSpec(method='scheme1', admm=AdmmConfig.from_config(max_iters=10))
    precoding = ci_slp_precoder(channel, symbols, solver=solver)
    np.testing.assert_array_equal(precoding.iterations, [10, 10])
