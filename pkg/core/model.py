from dataclasses import dataclass, field

import numpy as np

from core.exceptions import DimensionError, DomainError
from core.global_vars import CONFIG

PSK_ORDERS = (2, 4, 8, 16)


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype)
    array.flags.writeable = False
    return array


#----------------------------------------
# Domain types
#----------------------------------------

@dataclass(frozen=True, eq=False)
class Constellation:
    '''
    Unit-norm M-PSK constellation. Point m sits at angle (2m+1)pi/M so the
    decision boundaries lie at the angles 2m*pi/M.
    '''

    order: int
    points: np.ndarray

    @property
    def half_angle(self):
        return np.pi / self.order

    def indices_of(self, symbols):
        '''
        Map symbols to constellation indices, raising DomainError if any
        symbol is off the constellation.
        '''

        symbols = np.asarray(symbols)
        distances = np.abs(symbols[..., None] - self.points)
        indices = np.argmin(distances, axis=-1)
        if np.any(np.take_along_axis(distances, indices[..., None], axis=-1) > CONFIG['NUMERICS']['CONSTELLATION_ATOL']):
            raise DomainError(f'symbols are not all {self.order}-PSK points')
        return indices


@dataclass(frozen=True, eq=False)
class ChannelBlock:
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries, complex)
        if entries.ndim != 2 or 0 in entries.shape:
            raise DimensionError(f'channel must be a non-empty K x Nt matrix, got shape {entries.shape}')
        if not np.all(np.isfinite(entries)):
            raise DomainError('channel entries must be finite')
        object.__setattr__(self, 'entries', entries)

    @property
    def num_users(self):
        return self.entries.shape[0]

    @property
    def num_antennas(self):
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class SymbolBlock:
    '''
    K x N block of PSK symbols; column n is the symbol vector of slot n.
    '''

    symbols: np.ndarray
    constellation: Constellation
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        symbols = _frozen(self.symbols, complex)
        if symbols.ndim != 2 or 0 in symbols.shape:
            raise DimensionError(f'symbols must be a non-empty K x N matrix, got shape {symbols.shape}')
        object.__setattr__(self, 'symbols', symbols)
        object.__setattr__(self, 'indices', _frozen(self.constellation.indices_of(symbols), int))

    @property
    def num_users(self):
        return self.symbols.shape[0]

    @property
    def block_length(self):
        return self.symbols.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    variance: float
    power_budget: float = 1.0

    def __post_init__(self):
        if self.variance < 0 or not np.isfinite(self.variance):
            raise DomainError(f'noise variance must be finite and >= 0, got {self.variance}')
        if self.power_budget <= 0:
            raise DomainError(f'power budget must be > 0, got {self.power_budget}')

    @classmethod
    def from_snr_db(cls, snr_db, power_budget=1.0):
        if np.isposinf(snr_db):
            return cls(0.0, power_budget)
        return cls(power_budget * 10 ** (-snr_db / 10), power_budget)

    @property
    def snr_db(self):
        if self.variance == 0:
            return np.inf
        return 10 * np.log10(self.power_budget / self.variance)


#----------------------------------------
# Constructors and samplers
#----------------------------------------

def make_constellation(order):
    '''
    Build the unit-norm PSK constellation of the given order.

    Params:
        order (int): PSK order M, one of 2, 4, 8, 16

    Returns:
        constellation (Constellation): points sorted by phase
    '''

    if order not in PSK_ORDERS:
        raise DomainError(f'PSK order must be one of {PSK_ORDERS}, got {order}')

    angles = (2 * np.arange(order) + 1) * np.pi / order
    return Constellation(order, _frozen(np.exp(1j * angles), complex))


def sample_channel(rng, K, Nt):
    '''
    Rayleigh block-fading channel with unit-variance complex Gaussian entries.
    '''

    if K < 1 or Nt < 1:
        raise DimensionError(f'channel needs K >= 1 and Nt >= 1, got K={K}, Nt={Nt}')

    entries = (rng.standard_normal((K, Nt)) + 1j * rng.standard_normal((K, Nt))) / np.sqrt(2)
    return ChannelBlock(entries)


def sample_symbols(rng, K, N, constellation):
    if K < 1 or N < 1:
        raise DimensionError(f'symbol block needs K >= 1 and N >= 1, got K={K}, N={N}')

    indices = rng.integers(0, constellation.order, size=(K, N))
    return SymbolBlock(constellation.points[indices], constellation)


def sample_generic_symbols(rng, K, N, constellation, max_attempts=100):
    '''
    Draw a symbol block whose lifted vectors (Re s; Im s) and (Im s; -Re s)
    over all slots span a space of full dimension min(2K, 2N). Uniform blocks
    with few users often repeat a slot up to a common phase rotation, which
    makes the lifted set dependent.
    '''

    for _ in range(max_attempts):
        block = sample_symbols(rng, K, N, constellation)
        s = block.symbols
        lifted = np.hstack([np.vstack([s.real, s.imag]), np.vstack([s.imag, -s.real])])
        if np.linalg.matrix_rank(lifted) == min(2 * K, 2 * N):
            return block

    raise DomainError(f'no generic {constellation.order}-PSK block found for K={K}, N={N}')


def sample_noise(rng, shape, variance):
    return np.sqrt(variance / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def receive(channel, W, s, noise):
    '''
    Noisy received signal y = H W s + z stacked over users.

    Params:
        channel (ChannelBlock): K x Nt channel
        W (array): Nt x K complex precoder
        s (array): K-vector of symbols (or K x N block)
        noise (array): noise with the shape of H W s

    Returns:
        y (array): received signal
    '''

    H = channel.entries
    W = np.asarray(W)
    s = np.asarray(s)
    noise = np.asarray(noise)

    if W.shape != (channel.num_antennas, channel.num_users):
        raise DimensionError(f'precoder must be {channel.num_antennas} x {channel.num_users}, got {W.shape}')
    if s.shape[0] != channel.num_users:
        raise DimensionError(f'symbol vector must have {channel.num_users} rows, got {s.shape[0]}')
    if noise.shape != s.shape:
        raise DimensionError(f'noise shape {noise.shape} does not match symbols {s.shape}')

    return H @ W @ s + noise


def detect(y, constellation):
    '''
    Phase-sector detection. A sample on a decision boundary goes to the
    lower-index neighbour; y = 0 has phase 0 and maps to index 0.

    Params:
        y (complex or array): received samples
        constellation (Constellation)

    Returns:
        index (int or array of int): detected constellation indices
    '''

    y = np.asarray(y)
    if not np.all(np.isfinite(y)):
        raise DomainError('received samples must be finite')

    M = constellation.order
    sector = np.mod(np.angle(y), 2 * np.pi) * M / (2 * np.pi)
    index = np.floor(sector).astype(int)
    on_boundary = (sector == index) & (index > 0)
    index = np.where(on_boundary, index - 1, index) % M

    if index.ndim == 0:
        return int(index)
    return index
