'''
Symbol-scaling decomposition along PSK decision boundaries and the per-slot
real-valued maps used to write the CI margins as linear functions of the
lifted precoder.
'''

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from core.exceptions import DimensionError, GeometryError, SingularBasisError
from core.global_vars import DEBUG_CHECKS
from core.model import ChannelBlock, SymbolBlock, make_constellation


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BoundaryBasis:
    right: complex
    left: complex
    s_right: complex
    s_left: complex

    @property
    def matrix(self):
        return np.array([[self.s_right.real, self.s_left.real],
                         [self.s_right.imag, self.s_left.imag]])


@dataclass(frozen=True, eq=False)
class CiGeometry:
    '''
    Per-slot lifted maps of one transmission block. slot_matrices[n] is M^n,
    A[n] and B[n] its left and right Nt-column halves, and column n of s_E /
    c_E holds the lifted symbol vector of slot n and its quarter-turn T s_E.
    '''

    channel: ChannelBlock
    symbols: SymbolBlock
    slot_matrices: np.ndarray
    A: np.ndarray
    B: np.ndarray
    s_E: np.ndarray
    c_E: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    T: np.ndarray

    @property
    def num_users(self):
        return self.channel.num_users

    @property
    def num_antennas(self):
        return self.channel.num_antennas

    @property
    def block_length(self):
        return self.symbols.block_length

    @property
    def constellation(self):
        return self.symbols.constellation


#----------------------------------------
# Boundary decomposition
#----------------------------------------

def boundary_basis(constellation, index):
    '''
    Decision-boundary basis of constellation point index.

    Params:
        constellation (Constellation): PSK constellation with M >= 4
        index (int): point index m

    Returns:
        basis (BoundaryBasis): unit boundary directions at angles 2m*pi/M
            and 2(m+1)*pi/M and the components of the point along them
    '''

    M = constellation.order
    if M == 2:
        raise SingularBasisError('BPSK decision boundaries are collinear')

    right = np.exp(2j * np.pi * index / M)
    left = np.exp(2j * np.pi * (index + 1) / M)
    scale = 1 / (2 * np.cos(constellation.half_angle))

    return BoundaryBasis(right, left, scale * right, scale * left)


def decompose(z, basis):
    '''
    Solve z = alpha_right * s_right + alpha_left * s_left over the reals.
    '''

    matrix = basis.matrix
    det = np.linalg.det(matrix)
    if abs(det) <= 1e-12 * abs(basis.s_right) * abs(basis.s_left):
        raise SingularBasisError('boundary basis is collinear')

    alpha_right, alpha_left = np.linalg.solve(matrix, [z.real, z.imag])
    return alpha_right, alpha_left


@lru_cache(maxsize=None)
def _point_maps(order):
    '''
    2x2 maps from (Re y; Im y) to (alpha_right; alpha_left), one per point.
    BPSK collapses both rows to the projection Re(y conj(s)).
    '''

    constellation = make_constellation(order)
    if order == 2:
        maps = [np.array([[s.real, s.imag], [s.real, s.imag]]) for s in constellation.points]
    else:
        maps = [np.linalg.inv(boundary_basis(constellation, m).matrix) for m in range(order)]

    maps = np.array(maps)
    maps.flags.writeable = False
    return maps


#----------------------------------------
# Real-valued lifting
#----------------------------------------

def lift_vector(s):
    s = np.asarray(s)
    return np.concatenate([s.real, s.imag])


def lift_precoder(W):
    W = np.asarray(W)
    return np.block([[W.real, -W.imag], [W.imag, W.real]])


def precoder_hat(W):
    W = np.asarray(W)
    return np.hstack([W.real, -W.imag])


def complex_from_hat(w_hat):
    K = w_hat.shape[1] // 2
    return w_hat[:, :K] - 1j * w_hat[:, K:]


def structural_matrices(K, Nt):
    '''
    Returns:
        P (array): 2Nt x Nt, identity over zeros
        Q (array): 2Nt x Nt, zeros over identity
        T (array): 2K x 2K quarter-turn [0, I; -I, 0] with T @ T = -I
    '''

    eye_t = np.eye(Nt)
    zeros_t = np.zeros((Nt, Nt))
    P = np.vstack([eye_t, zeros_t])
    Q = np.vstack([zeros_t, eye_t])
    T = np.block([[np.zeros((K, K)), np.eye(K)], [-np.eye(K), np.zeros((K, K))]])
    return P, Q, T


#----------------------------------------
# Slot matrices and geometry
#----------------------------------------

def build_slot_matrix(channel, s_n, constellation):
    '''
    Build M^n, the 2K x 2Nt map from the lifted transmit signal W_E s_E^n to
    the stacked margins (alpha_right; alpha_left) of all users.

    Params:
        channel (ChannelBlock): K x Nt channel
        s_n (array): K symbols of slot n
        constellation (Constellation)

    Returns:
        M_n (array): rows 0..K-1 are the right-boundary margins, rows K..2K-1
            the left-boundary margins
    '''

    H = channel.entries
    K, Nt = H.shape
    s_n = np.asarray(s_n)
    if s_n.shape != (K,):
        raise DimensionError(f'slot symbols must be a {K}-vector, got shape {s_n.shape}')

    indices = constellation.indices_of(s_n)

    # (Re h_k x; Im h_k x) as a function of (Re x; Im x), per user
    lifted_rows = np.stack([
        np.hstack([H.real, -H.imag]),
        np.hstack([H.imag, H.real])], axis=1)

    rows = _point_maps(constellation.order)[indices] @ lifted_rows
    return np.vstack([rows[:, 0, :], rows[:, 1, :]])


def build_geometry(channel, symbols):
    K, Nt = channel.num_users, channel.num_antennas
    if symbols.num_users != K:
        raise DimensionError(f'symbol block has {symbols.num_users} users, channel has {K}')

    S = symbols.symbols
    slot_matrices = np.stack([
        build_slot_matrix(channel, S[:, n], symbols.constellation)
        for n in range(symbols.block_length)])

    P, Q, T = structural_matrices(K, Nt)
    s_E = np.vstack([S.real, S.imag])

    geometry = CiGeometry(
        channel=channel,
        symbols=symbols,
        slot_matrices=slot_matrices,
        A=slot_matrices @ P,
        B=slot_matrices @ Q,
        s_E=s_E,
        c_E=T @ s_E,
        P=P,
        Q=Q,
        T=T)

    if DEBUG_CHECKS:
        residual = check_lifting_identity(geometry, np.random.default_rng(0))
        logger.debug(f'lifting identity residual {residual:.2e}')
        if residual > 1e-10:
            raise GeometryError(f'lifting identity violated, residual {residual:.2e}')

    return geometry


def alpha_from_precoder(geometry, W):
    '''
    Margins through the complex lifting, alpha^n = M^n W_E s_E^n.

    Returns:
        alpha (array): 2K x N, column n holds the margins of slot n
    '''

    W_E = lift_precoder(W)
    return np.einsum('nij,jk,kn->in', geometry.slot_matrices, W_E, geometry.s_E)


def alpha_from_hat(geometry, w_hat):
    '''
    Margins through the half-size precoder, A^n w_hat s_E^n + B^n w_hat c_E^n.
    '''

    return (np.einsum('nij,jk,kn->in', geometry.A, w_hat, geometry.s_E)
            + np.einsum('nij,jk,kn->in', geometry.B, w_hat, geometry.c_E))


def check_lifting_identity(geometry, rng, draws=1):
    '''
    Largest relative gap between the two margin routes for random w_hat.
    '''

    worst = 0.0
    for _ in range(draws):
        w_hat = rng.standard_normal((geometry.num_antennas, 2 * geometry.num_users))
        W_E = geometry.P @ w_hat + geometry.Q @ w_hat @ geometry.T
        direct = np.einsum('nij,jk,kn->in', geometry.slot_matrices, W_E, geometry.s_E)
        split = alpha_from_hat(geometry, w_hat)
        worst = max(worst, np.linalg.norm(direct - split) / max(1.0, np.linalg.norm(direct)))
    return worst
