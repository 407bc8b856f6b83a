'''
Batch verification of the structural claims behind the block precoder:
ranks of D, U and the factors of U, pseudo-inverse feasibility, null-space
orthogonality, monotone descent of the scheme-2 augmented Lagrangian,
stationarity coupling and factorization caching. Failures are report
entries, never exceptions.
'''

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from core.ci_geometry import build_geometry
from core.exceptions import ConfigError
from core.global_vars import CONFIG
from core.model import make_constellation, sample_channel, sample_generic_symbols
from core.qp_builder import (assemble_u_factored, build_gram, build_qp,
                             nullspace_orthogonality, rank_report,
                             verify_pinv_feasibility)
from core.solvers import (TRACE_COLUMNS, UPDATE_ORDERS, AdmmConfig, admm_scheme2_step,
                          gamma_transpose, init_state)


logger = logging.getLogger(__name__)

MAX_QP_DIM = 512


@dataclass
class VerificationCase:
    name: str
    dims: tuple
    seeds: list
    tolerance: float
    passed: bool = True
    measured: dict = field(default_factory=dict)

    def record(self, seed, value, ok):
        self.measured[str(seed)] = value
        if not ok:
            self.passed = False
            logger.warning(f'{self.name} failed at dims {self.dims}, seed {seed}: {value}')


@dataclass
class VerificationReport:
    cases: list

    @property
    def passed(self):
        return all(case.passed for case in self.cases)

    @property
    def failures(self):
        return [case for case in self.cases if not case.passed]

    def to_dict(self):
        return {
            'passed': self.passed,
            'failures': len(self.failures),
            'cases': [asdict(case) for case in self.cases]}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), default=float, **kwargs)


def _instance(dims, seed, constellation):
    Nt, K, N = dims
    rng = np.random.default_rng(np.random.SeedSequence([seed, Nt, K, N]))
    channel = sample_channel(rng, K, Nt)
    symbols = sample_generic_symbols(rng, K, N, constellation)
    return rng, build_geometry(channel, symbols)


def _moore_penrose_residual(gram):
    D, pinv = gram.D, gram.pinv
    return max(
        np.linalg.norm(D @ pinv @ D - D) / max(1.0, np.linalg.norm(D)),
        np.linalg.norm(pinv @ D @ pinv - pinv) / max(1.0, np.linalg.norm(pinv)),
        np.linalg.norm(D @ pinv - (D @ pinv).T))


def descent_checks(trace, rho, phi, tol):
    '''
    Count the scheme-2 steps that break each augmented Lagrangian property.
    L starts at rho/2 ||c||^2 = rho/2 for the zero initialization.

    Returns:
        violations (int): L(k+1) - L(k) > ||dlambda||^2 / rho - rho/2 ||ddelta||^2
        increases (int): L(k+1) > L(k)
        shortfalls (int): L(k+1) - L(k) > -(rho/2 - 4 phi^2 / rho) ||ddelta||^2
    '''

    lagrangian = np.concatenate([[rho / 2], trace.lagrangian.to_numpy()])
    change = np.diff(lagrangian)
    slack = tol * np.maximum(1.0, np.abs(lagrangian[1:]))
    delta_sq = trace.delta_step.to_numpy() ** 2
    lambda_sq = trace.lambda_step.to_numpy() ** 2

    violations = int(np.sum(change > lambda_sq / rho - rho / 2 * delta_sq + slack))
    increases = int(np.sum(change > slack))
    shortfalls = int(np.sum(change > -(rho / 2 - 4 * phi ** 2 / rho) * delta_sq + slack))
    return violations, increases, shortfalls


def _scheme2_checks(qp, admm_iters):
    '''
    Run scheme 2 at rho = 2 sqrt(2) phi (1 + margin) in both update orders
    and sum the descent_checks counts over the two runs.

    Returns:
        counts (tuple): (violations, increases, shortfalls)
        stationarity (float): worst relative ||2 U delta - Gamma^T lambda||
            over all iterations of the analysis order
        factor_count (int): worst factorization count of the two runs
    '''

    tol = CONFIG['VERIFY']['TOL']['DESCENT']
    counts = np.zeros(3, dtype=int)
    stationarity = 0.0
    factor_count = 0

    for order in UPDATE_ORDERS:
        config = AdmmConfig.from_config(max_iters=admm_iters, rho_policy='auto', update_order=order,
                                        tol_primal=0.0, tol_dual=0.0)
        state = init_state(qp, 'scheme2', config)
        for _ in range(admm_iters):
            state = admm_scheme2_step(qp, state, config)
            if order == 'analysis':
                coupling = 2 * qp.U @ state.delta
                gap = np.linalg.norm(coupling - gamma_transpose(state.lam)) / max(1.0, np.linalg.norm(coupling))
                stationarity = max(stationarity, gap)

        trace = pd.DataFrame(state.trace, columns=TRACE_COLUMNS)
        counts += descent_checks(trace, state.rho, qp.phi, tol)
        factor_count = max(factor_count, state.kkt.factor_count)

    return tuple(int(count) for count in counts), stationarity, factor_count


def run_all(sizes=None, seeds=None, psk_order=None, admm_iters=None):
    '''
    Execute every check on every (size, seed).

    Params:
        sizes (list of (Nt, K, N)): default VERIFY.SIZES
        seeds (list of int): default range(VERIFY.SEEDS)
        psk_order (int): default VERIFY.PSK_ORDER
        admm_iters (int): scheme-2 budget, default VERIFY.ADMM_ITERS

    Returns:
        report (VerificationReport)
    '''

    verify = CONFIG['VERIFY']
    sizes = [tuple(size) for size in (sizes or verify['SIZES'])]
    seeds = list(seeds if seeds is not None else range(verify['SEEDS']))
    constellation = make_constellation(psk_order or verify['PSK_ORDER'])
    admm_iters = admm_iters or verify['ADMM_ITERS']
    tol = verify['TOL']

    for Nt, K, N in sizes:
        if 2 * N * K > MAX_QP_DIM:
            raise ConfigError(f'size (Nt={Nt}, K={K}, N={N}) exceeds QP dimension {MAX_QP_DIM}')

    cases = []
    for dims in sizes:
        Nt, K, N = dims
        square = Nt == K

        def case(name, tolerance=0.0):
            cases.append(VerificationCase(name, dims, seeds, tolerance))
            return cases[-1]

        rank_d = case('rank_D')
        rank_u1 = case('rank_U1_equals_rank_D')
        rank_u2 = case('rank_U2_equals_K') if square else None
        rank_uhat = case('rank_Uhat') if square else None
        rank_u = case('rank_U') if square else None
        applicable = case('closed_form_applicable')
        factored = case('factored_U', tol['FACTORED_U'])
        penrose = case('moore_penrose', tol['MOORE_PENROSE'])
        nullspace = case('nullspace_orthogonality', tol['NULLSPACE'])
        feasibility = case('pinv_feasibility', tol['FEASIBILITY'])
        descent = case('scheme2_descent_bound', tol['DESCENT'])
        increases = case('scheme2_monotone', tol['DESCENT'])
        shortfalls = case('scheme2_sufficient_decrease', tol['DESCENT'])
        stationarity = case('scheme2_stationarity', tol['STATIONARITY'])
        caching = case('factor_count')

        for seed in seeds:
            rng, geometry = _instance(dims, seed, constellation)
            gram = build_gram(geometry)
            qp = build_qp(geometry, gram)
            ranks = rank_report(geometry, gram, qp)

            rank_d.record(seed, ranks.rank_D, ranks.rank_D == ranks.predicted_D)
            rank_u1.record(seed, ranks.rank_U1, ranks.rank_U1 == ranks.rank_D)
            if square:
                rank_u2.record(seed, ranks.rank_U2, ranks.rank_U2 == K)
                rank_uhat.record(seed, ranks.rank_Uhat, ranks.rank_Uhat == ranks.predicted_U)
                rank_u.record(seed, ranks.rank_U, ranks.rank_U == ranks.predicted_U)
                applicable.record(seed, ranks.closed_form_applicable, ranks.closed_form_applicable == (N <= K))
            else:
                applicable.record(seed, ranks.closed_form_applicable, True)

            U_factored = assemble_u_factored(geometry, gram).U
            gap = np.linalg.norm(U_factored - qp.U) / max(1.0, np.linalg.norm(qp.U))
            factored.record(seed, gap, gap <= factored.tolerance)

            residual = _moore_penrose_residual(gram)
            penrose.record(seed, residual, residual <= penrose.tolerance)

            orthogonality = nullspace_orthogonality(geometry, gram)
            nullspace.record(seed, orthogonality, orthogonality <= nullspace.tolerance)

            residual = verify_pinv_feasibility(qp, rng.dirichlet(np.ones(qp.dim)))
            feasibility.record(seed, residual, residual <= feasibility.tolerance)

            (violations, rises, short), coupling, factor_count = _scheme2_checks(qp, admm_iters)
            descent.record(seed, violations, violations == 0)
            increases.record(seed, rises, rises == 0)
            shortfalls.record(seed, short, short == 0)
            stationarity.record(seed, coupling, coupling <= stationarity.tolerance)
            caching.record(seed, factor_count, factor_count == 1)

        logger.info(f'verified (Nt={Nt}, K={K}, N={N}) over {len(seeds)} seeds')

    return VerificationReport(cases)
