from dataclasses import dataclass
from enum import Enum

import numpy as np

from core.ci_geometry import build_geometry
from core.exceptions import DimensionError, DomainError, PrecoderError
from core.model import SymbolBlock
from core.precoder import evaluate_alpha, normalize_precoder, recover_precoder, transmit_vectors
from core.qp_builder import build_gram, build_qp
from core.solvers import SolverSpec, solve_delta


class BaselineKind(Enum):
    ZF = 'zf'
    RZF = 'rzf'
    CI_SLP = 'ci-slp'


@dataclass(frozen=True, eq=False)
class SlotPrecoding:
    '''
    Output of a per-slot precoder: transmit[:, n] is x^n and min_alpha[n]
    the margin reached in slot n.
    '''

    transmit: np.ndarray
    min_alpha: np.ndarray
    iterations: np.ndarray


def _check_users(channel):
    if channel.num_users > channel.num_antennas:
        raise DimensionError(
            f'zero-forcing needs K <= Nt, got K={channel.num_users}, Nt={channel.num_antennas}')


def _inverse_precoder(H, loading):
    K = H.shape[0]
    try:
        return H.conj().T @ np.linalg.inv(H @ H.conj().T + loading * np.eye(K))
    except np.linalg.LinAlgError as err:
        raise PrecoderError('channel Gram matrix is singular') from err


def zf_precoder(channel, symbols, p0=1.0):
    '''
    W = H^H (H H^H)^-1 with block-level power normalization.
    '''

    _check_users(channel)
    H = channel.entries
    if np.linalg.matrix_rank(H) < channel.num_users:
        raise PrecoderError('channel is rank deficient, zero-forcing inverse does not exist')

    return normalize_precoder(_inverse_precoder(H, 0.0), symbols, p0)


def rzf_precoder(channel, symbols, p0=1.0, sigma2=0.0):
    '''
    W = H^H (H H^H + (K sigma2 / p0) I)^-1 with block-level power
    normalization.
    '''

    _check_users(channel)
    if sigma2 < 0:
        raise DomainError(f'regularization needs sigma2 >= 0, got {sigma2}')

    loading = channel.num_users * sigma2 / p0
    return normalize_precoder(_inverse_precoder(channel.entries, loading), symbols, p0)


def ci_slp_precoder(channel, symbols, p0=1.0, solver=None):
    '''
    Symbol-level CI precoding: the block pipeline run on each slot alone,
    each slot with its own power budget p0.

    Params:
        channel (ChannelBlock)
        symbols (SymbolBlock): K x N block, solved slot by slot
        p0 (float): per-slot power budget
        solver (SolverSpec): method used on each slot QP

    Returns:
        precoding (SlotPrecoding)
    '''

    solver = solver or SolverSpec(method='oracle')
    N = symbols.block_length
    transmit = np.zeros((channel.num_antennas, N), dtype=complex)
    min_alpha = np.zeros(N)
    iterations = np.zeros(N, dtype=int)

    for n in range(N):
        slot = SymbolBlock(symbols.symbols[:, [n]], symbols.constellation)
        geometry = build_geometry(channel, slot)
        gram = build_gram(geometry)
        qp = build_qp(geometry, gram)

        delta, iterations[n] = solve_delta(qp, solver)
        precoder = recover_precoder(geometry, gram, delta, p0)

        transmit[:, n] = transmit_vectors(precoder, slot)[:, 0]
        _, min_alpha[n] = evaluate_alpha(geometry, precoder)

    return SlotPrecoding(transmit=transmit, min_alpha=min_alpha, iterations=iterations)
