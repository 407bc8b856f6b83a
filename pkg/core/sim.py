'''
Monte-Carlo harness: SER versus SNR or block length, solver timing and
single-instance convergence traces.

Every channel trial draws from its own SeedSequence([seed, trial]) stream,
so all schemes and SNR points see the same channels, symbols and unit-power
noise, and the number of workers never changes the counts.
'''

import logging
import platform
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from time import perf_counter
from typing import Optional

import numpy as np
import pandas as pd
from uncertainties import ufloat

from core.baselines import BaselineKind, ci_slp_precoder, rzf_precoder, zf_precoder
from core.ci_geometry import build_geometry
from core.exceptions import ConfigError
from core.global_vars import CONFIG
from core.model import (NoiseModel, detect, make_constellation, sample_channel,
                        sample_noise, sample_symbols)
from core.precoder import recover_precoder, transmit_vectors
from core.qp_builder import build_gram, build_qp
from core.solvers import AdmmConfig, SolverSpec, oracle_minimize, solve, solve_delta


logger = logging.getLogger(__name__)

RESULT_COLUMNS = ['scheme', 'axis', 'errors', 'symbols', 'ser', 'median_ms', 'iters']
CI_BLP_METHODS = {'ci-blp-admm1': 'scheme1', 'ci-blp-admm2': 'scheme2', 'ci-blp-oracle': 'oracle'}


#----------------------------------------
# Configuration
#----------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    schemes: tuple
    num_antennas: int
    num_users: int
    block_length: int
    psk_order: int
    snr_db: tuple
    block_lengths: tuple
    trials: int
    blocks_per_channel: int
    seed: int
    p0: float = 1.0
    workers: int = 1
    max_iters: int = 50
    rho: float = 0.03
    rho_policy: str = 'scaled'
    slp_solver: str = 'oracle'
    oracle_tol: Optional[float] = None

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError('at least one scheme is required')
        for tag in self.schemes:
            parse_scheme(tag, self)
        if min(self.num_antennas, self.num_users, self.block_length) < 1:
            raise ConfigError('Nt, K and N must all be >= 1')
        if self.trials < 1 or self.blocks_per_channel < 1:
            raise ConfigError('trials and blocks per channel must be >= 1')
        if not self.snr_db or not self.block_lengths:
            raise ConfigError('sweep axes must be non-empty')
        if min(self.block_lengths) < 1:
            raise ConfigError('block lengths must be >= 1')
        if self.workers < 1:
            raise ConfigError('workers must be >= 1')
        if self.p0 <= 0:
            raise ConfigError('p0 must be > 0')

    @classmethod
    def from_config(cls, section=None, **overrides):
        '''
        Build from an EXPERIMENT-style section (default: config.json) and
        keyword overrides; overrides equal to None are ignored.
        '''

        experiment = dict(CONFIG['EXPERIMENT'])
        experiment.update(section or {})
        solver = CONFIG['SOLVER']

        params = dict(
            schemes=tuple(experiment['SCHEMES']),
            num_antennas=experiment['NT'],
            num_users=experiment['K'],
            block_length=experiment['N'],
            psk_order=experiment['PSK_ORDER'],
            snr_db=tuple(experiment['SNR_DB']),
            block_lengths=tuple(experiment['BLOCK_LENGTHS']),
            trials=experiment['TRIALS'],
            blocks_per_channel=experiment['BLOCKS_PER_CHANNEL'],
            seed=experiment.get('SEED', 0),
            p0=experiment['P0'],
            workers=experiment['WORKERS'],
            max_iters=experiment.get('MAX_ITERS', solver['MAX_ITERS']),
            rho=experiment.get('RHO', solver['RHO']),
            rho_policy=experiment.get('RHO_POLICY', solver['RHO_POLICY']),
            slp_solver=experiment['SLP_SOLVER'],
            oracle_tol=experiment.get('ORACLE_TOL', solver['ORACLE_TOL']))

        for key, value in overrides.items():
            if value is None or (isinstance(value, (list, tuple)) and not value):
                continue
            params[key] = tuple(value) if isinstance(value, list) else value

        return cls(**params)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SchemeSpec:
    tag: str
    kind: str
    solver: Optional[SolverSpec] = None


def parse_scheme(tag, config):
    '''
    Map a scheme tag to its precoder. CI-BLP ADMM tags may carry their
    iteration budget, e.g. 'ci-blp-admm2-30'; otherwise max_iters applies.

    Returns:
        spec (SchemeSpec)
    '''

    admm = dict(rho=config.rho, rho_policy=config.rho_policy)

    if tag in (BaselineKind.ZF.value, BaselineKind.RZF.value):
        return SchemeSpec(tag, tag)

    if tag == BaselineKind.CI_SLP.value:
        solver = SolverSpec(method=config.slp_solver,
                            admm=AdmmConfig.from_config(max_iters=config.max_iters, **admm),
                            oracle_tol=config.oracle_tol)
        return SchemeSpec(tag, tag, solver)

    name, _, budget = tag.rpartition('-')
    if name in CI_BLP_METHODS and budget.isdigit():
        max_iters = int(budget)
    else:
        name, max_iters = tag, config.max_iters

    if name not in CI_BLP_METHODS:
        raise ConfigError(f'unknown scheme {tag}')

    solver = SolverSpec(method=CI_BLP_METHODS[name],
                        admm=AdmmConfig.from_config(max_iters=max_iters, **admm),
                        oracle_tol=config.oracle_tol)
    return SchemeSpec(tag, 'ci-blp', solver)


#----------------------------------------
# SER accounting
#----------------------------------------

def ser_with_uncertainty(errors, symbols):
    '''
    SER with its binomial standard error as a ufloat.
    '''

    ser = errors / symbols
    return ufloat(ser, np.sqrt(ser * (1 - ser) / symbols))


def ser_gap_sigmas(better, worse):
    '''
    (SER_worse - SER_better) in units of the combined standard error of two
    result rows.
    '''

    gap = (ser_with_uncertainty(worse['errors'], worse['symbols'])
           - ser_with_uncertainty(better['errors'], better['symbols']))
    if gap.s == 0:
        return np.inf if gap.n > 0 else 0.0
    return gap.n / gap.s


#----------------------------------------
# Precoding and transmission
#----------------------------------------

def precode_block(spec, channel, symbols, noise, p0):
    '''
    Transmit vectors of one block under a scheme.

    Returns:
        transmit (array): Nt x N, column n is x^n
        iterations (float): mean solver iterations (0 for linear precoders)
    '''

    if spec.kind == 'zf':
        return transmit_vectors(zf_precoder(channel, symbols, p0), symbols), 0
    if spec.kind == 'rzf':
        return transmit_vectors(rzf_precoder(channel, symbols, p0, noise.variance), symbols), 0
    if spec.kind == 'ci-slp':
        precoding = ci_slp_precoder(channel, symbols, p0, spec.solver)
        return precoding.transmit, precoding.iterations.mean()

    geometry = build_geometry(channel, symbols)
    gram = build_gram(geometry)
    qp = build_qp(geometry, gram)
    delta, iterations = solve_delta(qp, spec.solver)
    precoder = recover_precoder(geometry, gram, delta, p0)
    return transmit_vectors(precoder, symbols), iterations


def _trial_rngs(seed, trial, block_length):
    channel_rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    data_rng = np.random.default_rng(np.random.SeedSequence([seed, trial, block_length]))
    return channel_rng, data_rng


def _run_trials(config, block_length, snr_points, trials):
    '''
    Simulate a set of channel trials for one block length over all SNR
    points and schemes.

    Returns:
        counts (dict): (tag, snr) -> [errors, symbols, block times (ms), iterations]
    '''

    constellation = make_constellation(config.psk_order)
    specs = [parse_scheme(tag, config) for tag in config.schemes]
    noises = [NoiseModel.from_snr_db(snr, config.p0) for snr in snr_points]
    counts = defaultdict(lambda: [0, 0, [], []])

    for trial in trials:
        channel_rng, data_rng = _trial_rngs(config.seed, trial, block_length)
        channel = sample_channel(channel_rng, config.num_users, config.num_antennas)

        for _ in range(config.blocks_per_channel):
            symbols = sample_symbols(data_rng, config.num_users, block_length, constellation)
            unit_noise = sample_noise(data_rng, symbols.symbols.shape, 1.0)

            for spec in specs:
                cached = None
                for snr, noise in zip(snr_points, noises):
                    # only RZF depends on the noise level
                    if cached is None or spec.kind == 'rzf':
                        start = perf_counter()
                        transmit, iterations = precode_block(spec, channel, symbols, noise, config.p0)
                        cached = transmit, iterations, 1e3 * (perf_counter() - start)
                    transmit, iterations, ms = cached

                    y = channel.entries @ transmit + np.sqrt(noise.variance) * unit_noise
                    detected = detect(y, constellation)

                    entry = counts[(spec.tag, snr)]
                    entry[0] += int(np.sum(detected != symbols.indices))
                    entry[1] += symbols.symbols.size
                    entry[2].append(ms)
                    entry[3].append(iterations)

    return dict(counts)


def _merge(results):
    merged = defaultdict(lambda: [0, 0, [], []])
    for counts in results:
        for key, (errors, symbols, times, iterations) in counts.items():
            entry = merged[key]
            entry[0] += errors
            entry[1] += symbols
            entry[2].extend(times)
            entry[3].extend(iterations)
    return merged


def _simulate(config, block_length, snr_points):
    trials = range(config.trials)
    if config.workers == 1:
        return _run_trials(config, block_length, snr_points, trials)

    chunks = [trials[i::config.workers] for i in range(config.workers)]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        results = pool.map(_run_trials,
                           [config] * len(chunks),
                           [block_length] * len(chunks),
                           [snr_points] * len(chunks),
                           chunks)
        return _merge(results)


def _result_rows(config, counts, snr_points, axis_of):
    rows = []
    for tag in config.schemes:
        for snr in snr_points:
            errors, symbols, times, iterations = counts[(tag, snr)]
            ser = ser_with_uncertainty(errors, symbols)
            rows.append({
                'scheme': tag,
                'axis': axis_of(snr),
                'errors': errors,
                'symbols': symbols,
                'ser': ser.n,
                'median_ms': float(np.median(times)),
                'iters': float(np.mean(iterations)),
                'ser_stderr': ser.s,
                'mean_ms': float(np.mean(times))})
            logger.info(f'{tag} @ {axis_of(snr)}: SER {ser.n:.3e} ({errors}/{symbols}), '
                        f'median {np.median(times):.2f} ms')
    return rows


#----------------------------------------
# Experiments
#----------------------------------------

def run_ser_sweep(config):
    '''
    SER versus SNR at block length config.block_length.

    Returns:
        results (DataFrame): RESULT_COLUMNS plus ser_stderr and mean_ms
    '''

    snr_points = tuple(config.snr_db)
    counts = _simulate(config, config.block_length, snr_points)
    rows = _result_rows(config, counts, snr_points, lambda snr: snr)
    return pd.DataFrame(rows)


def run_blocklength_sweep(config):
    '''
    SER versus block length at the first configured SNR.
    '''

    snr = config.snr_db[0]
    rows = []
    for block_length in config.block_lengths:
        counts = _simulate(config, block_length, (snr,))
        rows.extend(_result_rows(config, counts, (snr,), lambda _: block_length))
    return pd.DataFrame(rows)


def machine_metadata():
    return {
        'platform': platform.platform(),
        'processor': platform.processor(),
        'python': platform.python_version(),
        'numpy': np.__version__}


def run_timing_bench(config):
    '''
    Wall time per block precoder computation, one block per trial.

    Returns:
        timing (DataFrame): scheme, trials, median_ms, mean_ms, iters
        metadata (dict): machine description
    '''

    constellation = make_constellation(config.psk_order)
    noise = NoiseModel.from_snr_db(config.snr_db[0], config.p0)
    specs = [parse_scheme(tag, config) for tag in config.schemes]
    times = defaultdict(list)
    iterations = defaultdict(list)

    for trial in range(config.trials):
        channel_rng, data_rng = _trial_rngs(config.seed, trial, config.block_length)
        channel = sample_channel(channel_rng, config.num_users, config.num_antennas)
        symbols = sample_symbols(data_rng, config.num_users, config.block_length, constellation)

        for spec in specs:
            start = perf_counter()
            _, iters = precode_block(spec, channel, symbols, noise, config.p0)
            times[spec.tag].append(1e3 * (perf_counter() - start))
            iterations[spec.tag].append(iters)

    timing = pd.DataFrame([{
        'scheme': tag,
        'trials': config.trials,
        'median_ms': float(np.median(times[tag])),
        'mean_ms': float(np.mean(times[tag])),
        'iters': float(np.mean(iterations[tag]))} for tag in config.schemes])

    return timing, machine_metadata()


def run_convergence_trace(config):
    '''
    ADMM convergence of both schemes on one seeded instance.

    Returns:
        traces (dict): scheme -> trace DataFrame
        reference (float): oracle objective of the instance
    '''

    constellation = make_constellation(config.psk_order)
    channel_rng, data_rng = _trial_rngs(config.seed, 0, config.block_length)
    channel = sample_channel(channel_rng, config.num_users, config.num_antennas)
    symbols = sample_symbols(data_rng, config.num_users, config.block_length, constellation)
    qp = build_qp(build_geometry(channel, symbols))

    admm = AdmmConfig.from_config(max_iters=config.max_iters, rho=config.rho, rho_policy=config.rho_policy)
    traces = {scheme: solve(qp, scheme, admm).trace for scheme in ('scheme1', 'scheme2')}

    delta = oracle_minimize(qp.U, config.oracle_tol).delta
    return traces, float(delta @ qp.U @ delta)
