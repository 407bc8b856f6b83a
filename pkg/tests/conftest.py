import numpy as np
import pytest

from core.ci_geometry import build_geometry
from core.model import make_constellation, sample_channel, sample_generic_symbols
from core.qp_builder import build_gram, build_qp


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def psk8():
    return make_constellation(8)


@pytest.fixture
def make_instance():
    '''
    Factory for a seeded (geometry, gram, qp) triple with a Rayleigh
    channel and a generic symbol block.
    '''

    def build(Nt, K, N, seed=0, order=8):
        rng = np.random.default_rng(np.random.SeedSequence([seed, Nt, K, N]))
        channel = sample_channel(rng, K, Nt)
        symbols = sample_generic_symbols(rng, K, N, make_constellation(order))
        geometry = build_geometry(channel, symbols)
        gram = build_gram(geometry)
        return geometry, gram, build_qp(geometry, gram)

    return build
