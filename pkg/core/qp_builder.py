'''
Assembly of the simplex QP  min d^T U d  s.t. 1^T d = 1, d >= 0  whose
solution gives the block-level precoder, together with the rank and
feasibility diagnostics of its building blocks.
'''

import logging
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sl

from core.exceptions import DimensionError, DomainError, QpAssemblyError
from core.global_vars import CONFIG


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GramData:
    D: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    rank: int
    pinv: np.ndarray

    @property
    def null_space(self):
        # eigenvalues are stored in decreasing order
        return self.eigvecs[:, self.rank:]


@dataclass(frozen=True, eq=False)
class QpProblem:
    U: np.ndarray
    p: np.ndarray
    f: np.ndarray
    g: np.ndarray
    q: np.ndarray
    phi: float
    geometry: object
    gram: GramData

    @property
    def dim(self):
        return self.U.shape[0]

    @property
    def dims(self):
        geometry = self.geometry
        return geometry.num_users, geometry.block_length, geometry.num_antennas


@dataclass(frozen=True, eq=False)
class FactoredU:
    u1_hat: np.ndarray
    u2_hat: np.ndarray
    u_hat: np.ndarray
    U: np.ndarray


@dataclass(frozen=True)
class RankReport:
    rank_D: int
    rank_U1: int
    rank_U2: int
    rank_Uhat: int
    rank_U: int
    predicted_D: int
    predicted_U: int
    square_system: bool
    closed_form_applicable: bool

    def to_dict(self):
        return asdict(self)


def numerical_rank(X):
    '''
    Count singular values above max_dim * sigma_max * RANK_RTOL.
    '''

    sigma = sl.svdvals(X)
    if sigma.size == 0 or sigma[0] == 0:
        return 0
    eps = max(X.shape) * sigma[0] * CONFIG['NUMERICS']['RANK_RTOL']
    return int(np.sum(sigma > eps))


#----------------------------------------
# Gram matrix and coefficient grids
#----------------------------------------

def build_gram(geometry):
    '''
    D = sum_n s_E^n s_E^n^T + c_E^n c_E^n^T and its eigen pseudo-inverse.

    Params:
        geometry (CiGeometry)

    Returns:
        gram (GramData): D, eigenpairs in decreasing order, numerical rank
            and D+ built from the eigenpairs above the rank threshold
    '''

    s_E, c_E = geometry.s_E, geometry.c_E
    D = s_E @ s_E.T + c_E @ c_E.T
    D = (D + D.T) / 2

    eigvals, eigvecs = sl.eigh(D)
    eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]

    eps = D.shape[0] * max(eigvals[0], 0.0) * CONFIG['NUMERICS']['RANK_RTOL']
    rank = int(np.sum(eigvals > eps))

    kept = eigvecs[:, :rank]
    pinv = (kept / eigvals[:rank]) @ kept.T

    return GramData(D=D, eigvals=eigvals, eigvecs=eigvecs, rank=rank, pinv=pinv)


def build_coefficients(gram, geometry):
    '''
    Coefficient grids p, f, g, q (N x N) with entries
    p[m, n] = s_E^m^T D+ s_E^n, f[m, n] = s_E^m^T D+ c_E^n,
    g[m, n] = c_E^m^T D+ s_E^n and q[m, n] = c_E^m^T D+ c_E^n.
    '''

    s_E, c_E, pinv = geometry.s_E, geometry.c_E, gram.pinv
    p = s_E.T @ pinv @ s_E
    f = s_E.T @ pinv @ c_E
    g = c_E.T @ pinv @ s_E
    q = c_E.T @ pinv @ c_E
    return p, f, g, q


def build_qp(geometry, gram=None):
    '''
    Assemble U blockwise,
    U[m, n] = p A^m A^n^T + f A^m B^n^T + g B^m A^n^T + q B^m B^n^T,
    with the block of slots (m, n) at rows 2Km.. and columns 2Kn...
    '''

    if gram is None:
        gram = build_gram(geometry)
    p, f, g, q = build_coefficients(gram, geometry)
    A, B = geometry.A, geometry.B

    blocks = (np.einsum('mn,mik,njk->mnij', p, A, A)
              + np.einsum('mn,mik,njk->mnij', f, A, B)
              + np.einsum('mn,mik,njk->mnij', g, B, A)
              + np.einsum('mn,mik,njk->mnij', q, B, B))

    N, _, dim_k, _ = blocks.shape
    U = blocks.transpose(0, 2, 1, 3).reshape(N * dim_k, N * dim_k)
    U = (U + U.T) / 2

    eigvals = sl.eigvalsh(U)
    phi = float(max(eigvals[-1], 0.0))
    if eigvals[0] < -CONFIG['NUMERICS']['PSD_RTOL'] * max(phi, 1.0):
        raise QpAssemblyError(f'U is not PSD, min eigenvalue {eigvals[0]:.3e} vs max {phi:.3e}')

    logger.debug(f'assembled U of dimension {U.shape[0]}, max eigenvalue {phi:.4g}')
    return QpProblem(U=U, p=p, f=f, g=g, q=q, phi=phi, geometry=geometry, gram=gram)


def assemble_u_factored(geometry, gram):
    '''
    Factored route U = S U_hat S^T with U_hat the Hadamard product of the
    block-expanded symbol kernel X^T D+ X and the channel Gram G G^T.

    Returns:
        factored (FactoredU)
    '''

    N, K = geometry.block_length, geometry.num_users
    dim_k = 2 * K

    # X = [s_E^1, c_E^1, ..., s_E^N, c_E^N]
    X = np.stack([geometry.s_E, geometry.c_E], axis=2).reshape(dim_k, 2 * N)
    u1_hat = X.T @ gram.pinv @ X

    # G = [A^1; B^1; ...; A^N; B^N]
    G = np.stack([geometry.A, geometry.B], axis=1).reshape(2 * N * dim_k, -1)
    u2_hat = G @ G.T

    u_hat = np.kron(u1_hat, np.ones((dim_k, dim_k))) * u2_hat

    S = np.kron(np.eye(N), np.hstack([np.eye(dim_k), np.eye(dim_k)]))
    U = S @ u_hat @ S.T

    return FactoredU(u1_hat=u1_hat, u2_hat=u2_hat, u_hat=u_hat, U=(U + U.T) / 2)


#----------------------------------------
# Feasibility and rank diagnostics
#----------------------------------------

def form_c_matrix(geometry, delta_E):
    '''
    C = sum_n A^n^T d^n s_E^n^T + B^n^T d^n c_E^n^T  (Nt x 2K), where d^n is
    the 2K-slice of delta_E belonging to slot n.
    '''

    N, K = geometry.block_length, geometry.num_users
    delta_E = np.asarray(delta_E, dtype=float)
    if delta_E.shape != (2 * N * K,):
        raise DimensionError(f'delta must have length {2 * N * K}, got shape {delta_E.shape}')

    slots = delta_E.reshape(N, 2 * K)
    return (np.einsum('nij,ni,kn->jk', geometry.A, slots, geometry.s_E)
            + np.einsum('nij,ni,kn->jk', geometry.B, slots, geometry.c_E))


def verify_pinv_feasibility(qp, delta_E):
    '''
    Relative residual ||W_hat D - C||_F / max(1, ||C||_F) of W_hat = C D+.
    '''

    delta_E = np.asarray(delta_E, dtype=float)
    if np.any(delta_E < 0):
        raise DomainError('delta must be elementwise non-negative')

    C = form_c_matrix(qp.geometry, delta_E)
    w_hat = C @ qp.gram.pinv
    return np.linalg.norm(w_hat @ qp.gram.D - C) / max(1.0, np.linalg.norm(C))


def nullspace_orthogonality(geometry, gram):
    '''
    Largest |s_E^n^T v| or |c_E^n^T v| over null eigenvectors v of D.
    '''

    V = gram.null_space
    if V.shape[1] == 0:
        return 0.0
    return float(max(np.abs(geometry.s_E.T @ V).max(), np.abs(geometry.c_E.T @ V).max()))


def rank_report(geometry, gram, qp):
    K, N, Nt = qp.dims
    factored = assemble_u_factored(geometry, gram)

    rank_U = numerical_rank(qp.U)
    report = RankReport(
        rank_D=numerical_rank(gram.D),
        rank_U1=numerical_rank(factored.u1_hat),
        rank_U2=numerical_rank(factored.u2_hat),
        rank_Uhat=numerical_rank(factored.u_hat),
        rank_U=rank_U,
        predicted_D=min(2 * K, 2 * N),
        predicted_U=min(2 * N * K, 2 * K ** 2),
        square_system=(Nt == K),
        closed_form_applicable=(rank_U == 2 * N * K))

    logger.debug(f'rank report (Nt={Nt}, K={K}, N={N}): {report}')
    return report
