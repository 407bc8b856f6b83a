import json

import pandas as pd
import pytest

from core.results import (build_run_id, read_results, sidecar_path, write_results,
                          write_timing, write_trace)
from core.sim import RESULT_COLUMNS, ExperimentConfig


@pytest.fixture
def config():
    return ExperimentConfig.from_config(seed=3, num_antennas=4, num_users=4, block_length=2)


@pytest.fixture
def table():
    return pd.DataFrame({
        'scheme': ['zf', 'ci-blp-oracle'],
        'axis': [10.0, 10.0],
        'errors': [12, 3],
        'symbols': [800, 800],
        'ser': [0.015, 0.00375],
        'median_ms': [0.2, 5.1],
        'iters': [0.0, 130.0],
        'ser_stderr': [0.004, 0.002],
        'mean_ms': [0.25, 5.3]})


def test_run_id(config):
    run_id = build_run_id('ser-sweep', config)
    assert 'ser-sweep' in run_id
    assert run_id.endswith('_Nt4_K4_N2_8PSK_seed3')


def test_write_and_read_results(tmp_path, table, config):
    path = write_results(table, tmp_path / 'out' / 'ser.csv', 'run-1', config)
    loaded = read_results(path)
    assert list(loaded.columns) == RESULT_COLUMNS
    assert loaded.errors.tolist() == [12, 3]

    with open(sidecar_path(path)) as sidecar:
        meta = json.load(sidecar)
    assert meta['run_id'] == 'run-1'
    assert meta['config']['seed'] == 3
    assert 'git_revision' in meta
    assert 'platform' in meta['machine']


def test_empty_results_rejected(tmp_path, table, config):
    with pytest.raises(ValueError):
        write_results(table.iloc[0:0], tmp_path / 'ser.csv', 'run-1', config)


def test_read_results_missing_columns(tmp_path):
    path = tmp_path / 'bad.csv'
    pd.DataFrame({'scheme': ['zf']}).to_csv(path, index=False)
    with pytest.raises(ValueError):
        read_results(path)


def test_write_timing_and_trace(tmp_path, config):
    timing = pd.DataFrame({'scheme': ['zf'], 'trials': [2], 'median_ms': [0.1], 'mean_ms': [0.1], 'iters': [0.0]})
    path = write_timing(timing, {'platform': 'test'}, tmp_path / 'timing.csv', 'run-2', config)
    with open(sidecar_path(path)) as sidecar:
        assert json.load(sidecar)['timing_machine'] == {'platform': 'test'}

    trace = pd.DataFrame({'iter': [1, 2], 'objective': [0.5, 0.4], 'primal': [1.0, 0.1],
                          'dual': [float('nan'), 0.2], 'lagrangian': [0.6, 0.5], 'seconds': [0.0, 0.0]})
    written = pd.read_csv(write_trace(trace, tmp_path / 'trace.csv'))
    assert list(written.columns) == ['iter', 'objective', 'primal', 'dual', 'lagrangian']
