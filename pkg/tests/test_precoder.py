import numpy as np
import pytest

from core.baselines import zf_precoder
from core.ci_geometry import build_geometry
from core.exceptions import DegenerateSolutionError, DomainError
from core.model import ChannelBlock, SymbolBlock
from core.precoder import (block_power, dual_objective_value, evaluate_alpha,
                           normalize_precoder, recover_precoder, transmit_vectors)
from core.qp_builder import build_gram, build_qp
from core.solvers import oracle_minimize


def test_single_user_single_antenna(psk8):
    channel = ChannelBlock(np.array([[1.0 + 0j]]))
    geometry = build_geometry(channel, SymbolBlock(psk8.points[np.array([[0]])], psk8))
    gram = build_gram(geometry)
    qp = build_qp(geometry, gram)

    precoder = recover_precoder(geometry, gram, oracle_minimize(qp.U).delta)
    _, min_alpha = evaluate_alpha(geometry, precoder)
    assert min_alpha == pytest.approx(1.0, abs=1e-6)
    assert abs(precoder.w_complex[0, 0]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize('p0', [1.0, 4.0])
def test_recovered_power_meets_budget(rng, make_instance, p0):
    geometry, gram, qp = make_instance(4, 3, 3)
    precoder = recover_precoder(geometry, gram, rng.dirichlet(np.ones(qp.dim)), p0)
    assert precoder.block_power == pytest.approx(3 * p0)
    assert np.sum(np.abs(transmit_vectors(precoder, geometry.symbols)) ** 2) == pytest.approx(3 * p0)


def test_weighted_margin_equals_dual_value(rng, make_instance):
    geometry, gram, qp = make_instance(4, 4, 3)
    delta = rng.dirichlet(np.ones(qp.dim))
    alpha, _ = evaluate_alpha(geometry, recover_precoder(geometry, gram, delta))
    assert delta @ alpha.T.ravel() == pytest.approx(dual_objective_value(qp, delta))


def test_optimum_closes_duality_gap(make_instance):
    geometry, gram, qp = make_instance(4, 4, 3)
    delta = oracle_minimize(qp.U).delta
    _, min_alpha = evaluate_alpha(geometry, recover_precoder(geometry, gram, delta))
    assert min_alpha == pytest.approx(dual_objective_value(qp, delta), rel=1e-4)


def test_dual_value_bounds_any_feasible_precoder(rng, make_instance):
    geometry, _, qp = make_instance(4, 4, 3)
    _, zf_margin = evaluate_alpha(geometry, zf_precoder(geometry.channel, geometry.symbols))
    for _ in range(5):
        assert zf_margin <= dual_objective_value(qp, rng.dirichlet(np.ones(qp.dim))) + 1e-9


def test_block_precoder_beats_zero_forcing(make_instance):
    geometry, gram, qp = make_instance(6, 6, 4)
    ci = recover_precoder(geometry, gram, oracle_minimize(qp.U).delta)
    zf = zf_precoder(geometry.channel, geometry.symbols)
    assert evaluate_alpha(geometry, ci)[1] >= evaluate_alpha(geometry, zf)[1] - 1e-9


def test_recover_rejects_negative_delta(make_instance):
    geometry, gram, qp = make_instance(3, 3, 2)
    delta = np.full(qp.dim, 1 / qp.dim)
    delta[0] = -0.1
    with pytest.raises(DomainError):
        recover_precoder(geometry, gram, delta)


def test_recover_zero_delta_is_degenerate(make_instance):
    geometry, gram, qp = make_instance(3, 3, 2)
    with pytest.raises(DegenerateSolutionError):
        recover_precoder(geometry, gram, np.zeros(qp.dim))


def test_normalize_precoder(psk8):
    symbols = SymbolBlock(psk8.points[np.array([[0, 1, 2], [3, 4, 5]])], psk8)
    precoder = normalize_precoder(np.eye(2), symbols, 2.0)
    assert precoder.block_power == pytest.approx(6.0)
    assert block_power(precoder.w_complex, symbols) == pytest.approx(6.0)
    assert precoder.scale == pytest.approx(1.0)
    with pytest.raises(DegenerateSolutionError):
        normalize_precoder(np.zeros((2, 2)), symbols, 1.0)
