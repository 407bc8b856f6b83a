import logging
from dataclasses import dataclass

import numpy as np

from core.ci_geometry import alpha_from_hat, complex_from_hat, precoder_hat
from core.exceptions import DegenerateSolutionError, DomainError
from core.qp_builder import form_c_matrix


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PrecoderMatrix:
    '''
    Block precoder in both forms: w_hat = [Re W, -Im W] (Nt x 2K) and the
    complex W (Nt x K). block_power is sum_n ||W s^n||^2 after scaling by
    scale.
    '''

    w_hat: np.ndarray
    w_complex: np.ndarray
    block_power: float
    scale: float


def block_power(W, symbols):
    return float(np.sum(np.abs(np.asarray(W) @ symbols.symbols) ** 2))


def normalize_precoder(W, symbols, p0):
    '''
    Scale W so the block meets sum_n ||W s^n||^2 = N p0 with equality.

    Returns:
        precoder (PrecoderMatrix)
    '''

    power = block_power(W, symbols)
    if power <= 0:
        raise DegenerateSolutionError('precoder transmits no power')

    scale = np.sqrt(symbols.block_length * p0 / power)
    W = scale * np.asarray(W)
    return PrecoderMatrix(w_hat=precoder_hat(W), w_complex=W, block_power=block_power(W, symbols), scale=scale)


def recover_precoder(geometry, gram, delta_E, p0=1.0):
    '''
    Closed-form block precoder from a QP solution, W_hat = beta C D+.

    Params:
        geometry (CiGeometry)
        gram (GramData)
        delta_E (array): non-negative QP solution
        p0 (float): per-slot power budget

    Returns:
        precoder (PrecoderMatrix)
    '''

    delta_E = np.asarray(delta_E, dtype=float)
    if np.any(delta_E < 0):
        raise DomainError('delta must be elementwise non-negative')

    C = form_c_matrix(geometry, delta_E)
    w_hat = C @ gram.pinv
    # sum_n ||W_E s_E^n||^2 = tr(W_hat D W_hat^T)
    power = float(np.trace(w_hat @ gram.D @ w_hat.T))
    if power <= 1e-14 * max(1.0, np.linalg.norm(C) ** 2):
        raise DegenerateSolutionError('delta lies in the kernel of U, recovered precoder is zero')

    scale = np.sqrt(geometry.block_length * p0 / power)
    w_hat = scale * w_hat
    logger.debug(f'recovered precoder, unscaled block power {power:.4g}, scale {scale:.4g}')
    W = complex_from_hat(w_hat)

    return PrecoderMatrix(
        w_hat=w_hat,
        w_complex=W,
        block_power=block_power(W, geometry.symbols),
        scale=scale)


def evaluate_alpha(geometry, precoder):
    '''
    Returns:
        alpha (array): 2K x N margins, column n for slot n
        min_alpha (float): the max-min objective reached by the precoder
    '''

    alpha = alpha_from_hat(geometry, precoder.w_hat)
    return alpha, float(alpha.min())


def dual_objective_value(qp, delta_E, p0=1.0):
    '''
    Max-min margin sqrt(N p0 delta^T U delta) implied by a dual point.
    '''

    delta_E = np.asarray(delta_E, dtype=float)
    return float(np.sqrt(qp.geometry.block_length * p0 * max(delta_E @ qp.U @ delta_E, 0.0)))


def transmit_vectors(precoder, symbols):
    return precoder.w_complex @ symbols.symbols

