'''
Solvers for the simplex QP  min d^T U d  s.t. 1^T d = 1, d >= 0.

Two ADMM splittings share one cached Cholesky factorization per problem:

    scheme1  keeps the equality in the d-subproblem (bordered KKT system)
             and splits d >= 0 onto a copy omega.
    scheme2  writes both constraints as Gamma d - c >= 0 with
             Gamma = [1^T; I], c = (1; 0), and splits them onto a slack
             omega_hat of length dim + 1.

The projected-gradient oracle is an independent reference used for checks
and for the exact CI baselines.
'''

import logging
from dataclasses import dataclass, field, replace
from time import perf_counter
from typing import Optional

import numpy as np
import pandas as pd
import scipy.linalg as sl

from core.exceptions import ConfigError, DimensionError, FactorizationError, OracleConvergenceError
from core.global_vars import CONFIG


logger = logging.getLogger(__name__)

SCHEMES = ('scheme1', 'scheme2')
RHO_POLICIES = ('fixed', 'scaled', 'auto')
UPDATE_ORDERS = ('listing', 'analysis')
TRACE_COLUMNS = ['iter', 'objective', 'primal', 'dual', 'lagrangian',
                 'delta_step', 'lambda_step', 'seconds']


#----------------------------------------
# Configuration and state
#----------------------------------------

@dataclass(frozen=True, eq=False)
class AdmmConfig:
    rho: float = 0.03
    max_iters: int = 50
    tol_primal: float = 0.0
    tol_dual: float = 0.0
    rho_policy: str = 'scaled'
    margin: float = 0.05
    update_order: str = 'listing'
    warm_start: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigError(f'rho must be > 0, got {self.rho}')
        if self.max_iters < 0:
            raise ConfigError(f'max_iters must be >= 0, got {self.max_iters}')
        if self.tol_primal < 0 or self.tol_dual < 0:
            raise ConfigError('residual tolerances must be >= 0')
        if self.rho_policy not in RHO_POLICIES:
            raise ConfigError(f'rho_policy must be one of {RHO_POLICIES}, got {self.rho_policy}')
        if self.margin < 0:
            raise ConfigError(f'margin must be >= 0, got {self.margin}')
        if self.update_order not in UPDATE_ORDERS:
            raise ConfigError(f'update_order must be one of {UPDATE_ORDERS}, got {self.update_order}')

    @classmethod
    def from_config(cls, **overrides):
        '''
        Defaults from the SOLVER section of config.json; keyword overrides
        equal to None are ignored.
        '''

        solver = CONFIG['SOLVER']
        params = dict(
            rho=solver['RHO'],
            max_iters=solver['MAX_ITERS'],
            tol_primal=solver['TOL_PRIMAL'],
            tol_dual=solver['TOL_DUAL'],
            rho_policy=solver['RHO_POLICY'],
            margin=solver['RHO_MARGIN'],
            update_order=solver['UPDATE_ORDER'])
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)


def resolve_rho(config, phi):
    '''
    Penalty actually used, given phi = lambda_max(U):

        fixed   rho as configured
        scaled  rho * phi, so rho is read in units of the largest eigenvalue
        auto    2*sqrt(2)*phi*(1 + margin)

    Under the scaled policy the iterates do not change when U is multiplied
    by a positive constant. Both phi-relative policies fall back to the
    configured rho when U = 0.
    '''

    if phi <= 0 or config.rho_policy == 'fixed':
        return config.rho
    if config.rho_policy == 'scaled':
        return config.rho * phi
    return 2 * np.sqrt(2) * phi * (1 + config.margin)


class CachedKkt:
    '''
    Lazily factorized normal matrix of one ADMM scheme.

    scheme1: Cholesky of 2U + rho I; the bordered system with the row 1^T is
        solved through its Schur complement using G^-1 1, computed once.
    scheme2: Cholesky of 2U + rho (1 1^T + I).

    The factor is created on first use and never recomputed.
    '''

    def __init__(self, scheme, U, rho):
        self.scheme = scheme
        self.rho = rho
        self.dim = U.shape[0]
        self._U = U
        self._factor = None
        self.ones_solve = None
        self.factor_count = 0

    def _factorize(self):
        G = 2 * self._U + self.rho * np.eye(self.dim)
        if self.scheme == 'scheme2':
            G += self.rho * np.ones((self.dim, self.dim))
        try:
            self._factor = sl.cho_factor(G)
        except np.linalg.LinAlgError as err:
            raise FactorizationError(f'{self.scheme} normal matrix is not positive definite') from err
        self.factor_count += 1
        logger.debug(f'{self.scheme}: factorized normal matrix of dimension {self.dim}')

        if self.scheme == 'scheme1':
            self.ones_solve = sl.cho_solve(self._factor, np.ones(self.dim))

    def solve(self, rhs):
        if self._factor is None:
            self._factorize()
        return sl.cho_solve(self._factor, rhs)

    def solve_bordered(self, rhs):
        '''
        Solve [G, 1; 1^T, 0] [d; nu] = [rhs; 1].
        '''

        x = self.solve(rhs)
        nu = (x.sum() - 1) / self.ones_solve.sum()
        return x - nu * self.ones_solve, nu


@dataclass(frozen=True, eq=False)
class AdmmState:
    delta: np.ndarray
    omega: np.ndarray
    lam: np.ndarray
    rho: float
    kkt: CachedKkt
    nu: float = 0.0
    iter: int = 0
    omega_prev: Optional[np.ndarray] = None
    trace: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class SolveResult:
    delta: np.ndarray
    trace: pd.DataFrame
    stats: dict
    state: AdmmState


#----------------------------------------
# Scheme-2 constraint operator
#----------------------------------------

def gamma_apply(delta):
    return np.concatenate([[delta.sum()], delta])


def gamma_transpose(v):
    return v[0] + v[1:]


def c_vector(dim):
    c = np.zeros(dim + 1)
    c[0] = 1.0
    return c


#----------------------------------------
# ADMM
#----------------------------------------

def init_state(qp, scheme, config):
    if scheme not in SCHEMES:
        raise ConfigError(f'scheme must be one of {SCHEMES}, got {scheme}')

    dim = qp.dim
    rho = resolve_rho(config, qp.phi)
    aux_dim = dim if scheme == 'scheme1' else dim + 1

    delta = np.zeros(dim)
    omega = np.zeros(aux_dim)
    if config.warm_start is not None:
        delta = np.array(config.warm_start, dtype=float)
        if delta.shape != (dim,):
            raise DimensionError(f'warm start must have length {dim}, got shape {delta.shape}')
        omega = np.maximum(0, delta if scheme == 'scheme1' else gamma_apply(delta) - c_vector(dim))

    return AdmmState(
        delta=delta,
        omega=omega,
        lam=np.zeros(aux_dim),
        rho=rho,
        kkt=CachedKkt(scheme, qp.U, rho))


def residuals(qp, state, scheme):
    '''
    Returns:
        (primal, dual) residual norms; dual is nan before the first update
    '''

    if scheme == 'scheme1':
        primal = np.linalg.norm(state.delta - state.omega)
        if state.omega_prev is None:
            return primal, np.nan
        return primal, state.rho * np.linalg.norm(state.omega - state.omega_prev)

    r = -gamma_apply(state.delta) + c_vector(qp.dim) + state.omega
    if state.omega_prev is None:
        return np.linalg.norm(r), np.nan
    return np.linalg.norm(r), np.linalg.norm(gamma_transpose(state.omega - state.omega_prev))


def augmented_lagrangian(qp, state, scheme):
    delta, omega, lam, rho = state.delta, state.omega, state.lam, state.rho
    objective = delta @ qp.U @ delta

    if scheme == 'scheme1':
        r = delta - omega
        return objective - lam @ r + rho / 2 * (r @ r)

    r = -gamma_apply(delta) + c_vector(qp.dim) + omega
    return objective + lam @ r + rho / 2 * (r @ r)


def _advance(qp, state, scheme, seconds, **updates):
    new = replace(state, iter=state.iter + 1, omega_prev=state.omega, **updates)
    primal, dual = residuals(qp, new, scheme)
    row = (
        new.iter,
        new.delta @ qp.U @ new.delta,
        primal,
        dual,
        augmented_lagrangian(qp, new, scheme),
        np.linalg.norm(new.delta - state.delta),
        np.linalg.norm(new.lam - state.lam),
        seconds)
    return replace(new, trace=state.trace + [row])


def admm_scheme1_step(qp, state, config):
    '''
    One scheme-1 iteration: bordered KKT solve for delta (1^T delta = 1),
    omega = max(0, delta - lambda/rho), lambda -= rho (delta - omega).
    '''

    rho = state.rho
    start = perf_counter()

    delta, nu = state.kkt.solve_bordered(rho * state.omega + state.lam)
    omega = np.maximum(0, delta - state.lam / rho)
    lam = state.lam - rho * (delta - omega)

    return _advance(qp, state, 'scheme1', perf_counter() - start,
                    delta=delta, omega=omega, lam=lam, nu=nu)


def admm_scheme2_step(qp, state, config):
    '''
    One scheme-2 iteration. The listing order updates delta, omega_hat,
    lambda_hat; the analysis order moves the omega_hat update first, after
    which 2 U delta = Gamma^T lambda_hat holds exactly.
    '''

    rho = state.rho
    c = c_vector(qp.dim)
    start = perf_counter()

    if config.update_order == 'analysis':
        omega = np.maximum(0, gamma_apply(state.delta) - c - state.lam / rho)
        delta = state.kkt.solve(gamma_transpose(rho * (c + omega) + state.lam))
    else:
        delta = state.kkt.solve(gamma_transpose(rho * (c + state.omega) + state.lam))
        omega = np.maximum(0, gamma_apply(delta) - c - state.lam / rho)
    lam = state.lam + rho * (-gamma_apply(delta) + c + omega)

    return _advance(qp, state, 'scheme2', perf_counter() - start,
                    delta=delta, omega=omega, lam=lam)


STEPS = {'scheme1': admm_scheme1_step, 'scheme2': admm_scheme2_step}


def _converged(row, config):
    if config.tol_primal <= 0 and config.tol_dual <= 0:
        return False
    _, _, primal, dual, *_ = row
    return primal < config.tol_primal and dual < config.tol_dual


def multiplication_count(dim, iterations):
    '''
    Real multiplications of the cached-Cholesky route: one factorization
    of the dim x dim normal matrix plus a dense solve per iteration.
    '''

    return dim ** 3 / 3 + iterations * dim * (dim + 1)


def solve(qp, scheme, config):
    '''
    Run ADMM from the zero initialization (or config.warm_start).

    Params:
        qp (QpProblem)
        scheme (str): 'scheme1' or 'scheme2'
        config (AdmmConfig)

    Returns:
        result (SolveResult): final delta, per-iteration trace and stats
            (iterations, rho, factor_count, wall_time, mult_count, converged)
    '''

    state = init_state(qp, scheme, config)
    step = STEPS[scheme]
    converged = False

    start = perf_counter()
    for _ in range(config.max_iters):
        state = step(qp, state, config)
        if _converged(state.trace[-1], config):
            converged = True
            break
    wall_time = perf_counter() - start

    trace = pd.DataFrame(state.trace, columns=TRACE_COLUMNS)
    stats = {
        'scheme': scheme,
        'iterations': state.iter,
        'rho': state.rho,
        'factor_count': state.kkt.factor_count,
        'wall_time': wall_time,
        'mult_count': multiplication_count(qp.dim, state.iter),
        'converged': converged}

    if state.iter:
        logger.debug(f'{scheme}: {state.iter} iterations, primal {trace.primal.iloc[-1]:.2e}, '
                     f'dual {trace.dual.iloc[-1]:.2e}, rho {state.rho:.4g}')

    return SolveResult(delta=state.delta, trace=trace, stats=stats, state=state)


#----------------------------------------
# Projected-gradient oracle
#----------------------------------------

@dataclass(frozen=True, eq=False)
class OracleResult:
    delta: np.ndarray
    iterations: int
    gradient_norm: float


@dataclass(frozen=True)
class KktCertificate:
    stationarity: float
    complementarity: float
    feasibility: float

    @property
    def residual(self):
        return max(self.stationarity, self.complementarity, self.feasibility)


def project_simplex(v):
    '''
    Euclidean projection onto {x >= 0, sum(x) = 1} by sorting.
    '''

    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    theta = css[cond][-1] / ind[cond][-1]
    return np.maximum(v - theta, 0)


def project_nonnegative(delta):
    return np.maximum(delta, 0)


def oracle_minimize(U, tol=None, max_iters=None):
    '''
    Accelerated projected gradient with adaptive restart on the simplex,
    step 1/(2 phi), stopped on the gradient mapping norm.

    Params:
        U (array): symmetric PSD matrix
        tol (float): gradient mapping tolerance, default ORACLE_TOL
        max_iters (int): iteration cap, default ORACLE_MAX_ITERS

    Returns:
        result (OracleResult)
    '''

    tol = CONFIG['SOLVER']['ORACLE_TOL'] if tol is None else tol
    max_iters = CONFIG['SOLVER']['ORACLE_MAX_ITERS'] if max_iters is None else max_iters

    U = np.asarray(U, dtype=float)
    dim = U.shape[0]
    x = np.full(dim, 1 / dim)

    L = 2 * sl.eigvalsh(U)[-1]
    if L <= 0:
        return OracleResult(x, 0, 0.0)

    y, t = x.copy(), 1.0
    best, best_norm = x, np.inf

    for it in range(1, max_iters + 1):
        x_new = project_simplex(y - 2 * (U @ y) / L)
        gradient_norm = L * np.linalg.norm(y - x_new)

        if gradient_norm < best_norm:
            best, best_norm = x_new, gradient_norm
        if gradient_norm < tol:
            return OracleResult(x_new, it, gradient_norm)

        if (y - x_new) @ (x_new - x) > 0:
            # momentum points uphill: restart
            y, t = x_new, 1.0
        else:
            t_new = (1 + np.sqrt(1 + 4 * t ** 2)) / 2
            y = x_new + (t - 1) / t_new * (x_new - x)
            t = t_new
        x = x_new

    raise OracleConvergenceError(
        f'oracle did not reach gradient norm {tol:.1e} in {max_iters} iterations (best {best_norm:.2e})',
        best_iterate=best,
        gradient_norm=best_norm)


def oracle_solve(qp, tol=None):
    return oracle_minimize(qp.U, tol).delta


def kkt_certificate(U, delta):
    '''
    Optimality certificate on the simplex with g = 2 U delta and
    nu = delta^T g: g_i >= nu everywhere, g_i = nu on the support.
    '''

    delta = np.asarray(delta, dtype=float)
    g = 2 * np.asarray(U) @ delta
    nu = delta @ g

    return KktCertificate(
        stationarity=float(max(0.0, np.max(nu - g))),
        complementarity=float(np.max(delta * np.abs(g - nu))),
        feasibility=float(max(abs(delta.sum() - 1), max(0.0, -delta.min()))))


#----------------------------------------
# Unified entry point
#----------------------------------------

@dataclass(frozen=True, eq=False)
class SolverSpec:
    method: str = 'scheme2'
    admm: AdmmConfig = field(default_factory=AdmmConfig.from_config)
    oracle_tol: Optional[float] = None
    oracle_max_iters: Optional[int] = None

    def __post_init__(self):
        if self.method not in SCHEMES + ('oracle',):
            raise ConfigError(f'solver method must be scheme1, scheme2 or oracle, got {self.method}')


def solve_delta(qp, spec):
    '''
    Solve with spec.method and return a non-negative delta
    ready for precoder recovery.

    Returns:
        delta (array), iterations (int)
    '''

    if spec.method == 'oracle':
        try:
            result = oracle_minimize(qp.U, spec.oracle_tol, spec.oracle_max_iters)
        except OracleConvergenceError as err:
            logger.warning(f'{err}; using best iterate')
            return err.best_iterate, spec.oracle_max_iters or CONFIG['SOLVER']['ORACLE_MAX_ITERS']
        return result.delta, result.iterations

    result = solve(qp, spec.method, spec.admm)
    return project_nonnegative(result.delta), result.stats['iterations']
