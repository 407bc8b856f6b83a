import json
import logging
import subprocess
from datetime import datetime
from pathlib import Path

import pandas as pd

from core.global_vars import ENV, VERSION
from core.sim import RESULT_COLUMNS, machine_metadata


logger = logging.getLogger(__name__)

TRACE_EXPORT_COLUMNS = ['iter', 'objective', 'primal', 'dual', 'lagrangian']


def git_revision():
    '''
    Commit hash of the working tree, or 'unknown' outside a git checkout.
    '''

    try:
        completed = subprocess.run(
            ['git', 'rev-parse', 'HEAD'],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, check=True)
    except (OSError, subprocess.CalledProcessError):
        return 'unknown'
    return completed.stdout.strip()


def build_run_id(command, config):
    '''
    Run identifier: date, command and the main dimensions joined by '_'.
    '''

    date = datetime.now().strftime('%Y%m%d-%H%M%S')
    params = [date, command,
              f'Nt{config.num_antennas}', f'K{config.num_users}', f'N{config.block_length}',
              f'{config.psk_order}PSK', f'seed{config.seed}']
    return '_'.join(params)


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + '.json')


def write_sidecar(path, run_id, config, **extra):
    '''
    JSON sidecar next to a result file with the run id, full config, git
    revision, package version and machine description.
    '''

    sidecar = {
        'run_id': run_id,
        'config': config.to_dict() if hasattr(config, 'to_dict') else config,
        'git_revision': git_revision(),
        'version': VERSION,
        'env': ENV,
        'machine': machine_metadata()}
    sidecar.update(extra)

    target = sidecar_path(path)
    with open(target, 'w') as out:
        json.dump(sidecar, out, indent=4, default=str)
    return target


def write_results(results, path, run_id, config):
    '''
    SER table as CSV with the fixed column order, plus its sidecar.

    Params:
        results (DataFrame): output of a sweep
        path (str or Path): CSV destination
        run_id (str)
        config (ExperimentConfig)
    '''

    if results.empty:
        raise ValueError('no results to write')

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    results[RESULT_COLUMNS].to_csv(path, index=False)
    write_sidecar(path, run_id, config)
    logger.info(f'wrote {len(results)} rows to {path}')
    return path


def write_timing(timing, metadata, path, run_id, config):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    timing.to_csv(path, index=False)
    write_sidecar(path, run_id, config, timing_machine=metadata)
    logger.info(f'wrote timing for {len(timing)} schemes to {path}')
    return path


def write_trace(trace, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace[TRACE_EXPORT_COLUMNS].to_csv(path, index=False)
    return path


def read_results(path):
    results = pd.read_csv(path)
    missing = set(RESULT_COLUMNS) - set(results.columns)
    if missing:
        raise ValueError(f'{path} is missing result columns {sorted(missing)}')
    return results
