import functools
import json
from pathlib import Path

import click

from core import figures, results
from core.exceptions import CiblpError, ConfigError
from core.global_vars import configure_logging
from core.sim import (ExperimentConfig, run_blocklength_sweep, run_convergence_trace,
                      run_ser_sweep, run_timing_bench, ser_with_uncertainty)
from core.verify_suite import run_all


def experiment_options(command):
    '''
    Options shared by every experiment command; each one overrides the
    matching EXPERIMENT field of config.json or of --config.
    '''

    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='JSON file with an EXPERIMENT section.'),
        click.option('--seed', type=int, required=True, help='Master seed (required).'),
        click.option('--scheme', 'schemes', multiple=True,
                     help='zf, rzf, ci-slp, ci-blp-admm1[-K], ci-blp-admm2[-K], ci-blp-oracle.'),
        click.option('--nt', 'num_antennas', type=int, help='Transmit antennas.'),
        click.option('--k', 'num_users', type=int, help='Users.'),
        click.option('--n', 'block_length', type=int, help='Block length.'),
        click.option('--psk', 'psk_order', type=click.Choice(['2', '4', '8', '16']), help='PSK order.'),
        click.option('--snr', 'snr_db', type=float, multiple=True, help='SNR in dB (repeatable).'),
        click.option('--block-length', 'block_lengths', type=int, multiple=True,
                     help='Block length sweep value (repeatable).'),
        click.option('--trials', type=int, help='Channel realizations.'),
        click.option('--blocks', 'blocks_per_channel', type=int, help='Blocks per channel realization.'),
        click.option('--max-iters', type=int, help='ADMM iteration budget.'),
        click.option('--rho', type=float, help='ADMM penalty.'),
        click.option('--rho-policy', type=click.Choice(['fixed', 'scaled', 'auto']),
                     help='fixed: rho as given; scaled: rho times lambda_max(U); auto: convergent bound.'),
        click.option('--workers', type=int, help='Worker processes.'),
        click.option('--p0', type=float, help='Per-slot power budget.'),
        click.option('--output', type=click.Path(), help='Result file (default results/<run id>.csv).'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as err:
            raise click.UsageError(str(err))
        except CiblpError as err:
            raise click.ClickException(str(err))
    return wrapper


def load_experiment(config_path, **flags):
    section = None
    if config_path:
        with open(config_path, 'r') as cfg:
            data = json.load(cfg)
        section = dict(data.get('EXPERIMENT', data))
        # SOLVER keys the experiment understands
        for key in ('RHO', 'RHO_POLICY', 'MAX_ITERS', 'ORACLE_TOL'):
            if key in data.get('SOLVER', {}):
                section.setdefault(key, data['SOLVER'][key])

    if flags.get('psk_order') is not None:
        flags['psk_order'] = int(flags['psk_order'])
    flags = {key: (list(value) if isinstance(value, tuple) else value) for key, value in flags.items()}
    return ExperimentConfig.from_config(section, **flags)


def output_path(output, command, config, suffix='.csv'):
    if output:
        return Path(output)
    return Path('results') / (results.build_run_id(command, config) + suffix)


@click.group()
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']),
              help='Override the configured log level.')
def cli(log_level):
    '''
    Constructive-interference block-level precoding: experiments and checks.
    '''

    configure_logging(log_level)


@cli.command('ser-sweep')
@experiment_options
@handle_errors
def ser_sweep(config_path, output, **flags):
    '''SER versus SNR for the configured schemes.'''

    config = load_experiment(config_path, **flags)
    table = run_ser_sweep(config)
    path = output_path(output, 'ser-sweep', config)
    results.write_results(table, path, path.stem, config)
    figures.write_figures(path.with_suffix('.html'), figures.ser_figure(table, 'SNR (dB)'))
    click.echo(table[results.RESULT_COLUMNS].to_string(index=False))


@cli.command('blocklength-sweep')
@experiment_options
@handle_errors
def blocklength_sweep(config_path, output, **flags):
    '''SER versus block length at the first SNR.'''

    config = load_experiment(config_path, **flags)
    table = run_blocklength_sweep(config)
    path = output_path(output, 'blocklength-sweep', config)
    results.write_results(table, path, path.stem, config)
    figures.write_figures(path.with_suffix('.html'), figures.ser_figure(table, 'Block length N'))
    click.echo(table[results.RESULT_COLUMNS].to_string(index=False))


@cli.command()
@experiment_options
@handle_errors
def timing(config_path, output, **flags):
    '''Median wall time per block precoder computation.'''

    config = load_experiment(config_path, **flags)
    table, metadata = run_timing_bench(config)
    path = output_path(output, 'timing', config)
    results.write_timing(table, metadata, path, path.stem, config)
    figures.write_figures(path.with_suffix('.html'), figures.timing_figure(table))
    click.echo(table.to_string(index=False))


@cli.command()
@experiment_options
@handle_errors
def trace(config_path, output, **flags):
    '''ADMM convergence dump of both schemes on one seeded instance.'''

    config = load_experiment(config_path, **flags)
    traces, reference = run_convergence_trace(config)
    path = output_path(output, 'trace', config)
    path.parent.mkdir(parents=True, exist_ok=True)

    for scheme, table in traces.items():
        target = results.write_trace(table, path.with_name(f'{path.stem}_{scheme}.csv'))
        last = table.iloc[-1] if len(table) else None
        if last is not None:
            click.echo(f'{scheme}: {int(last.iter)} iterations, objective {last.objective:.6g} '
                       f'(oracle {reference:.6g}), primal {last.primal:.2e}, dual {last.dual:.2e} -> {target}')

    results.write_sidecar(path, path.stem, config, oracle_objective=reference)
    figures.write_figures(path.with_suffix('.html'), *figures.trace_figure(traces, reference))


def parse_size(value):
    try:
        size = tuple(int(part) for part in value.split(','))
    except ValueError:
        size = ()
    if len(size) != 3:
        raise click.BadParameter(f'size must be Nt,K,N, got {value}')
    return size


@cli.command()
@click.option('--size', 'sizes', multiple=True, help='Nt,K,N (repeatable); default VERIFY.SIZES.')
@click.option('--seeds', type=int, help='Number of seeds per size.')
@click.option('--psk', 'psk_order', type=click.Choice(['2', '4', '8', '16']))
@click.option('--admm-iters', type=int, help='Scheme-2 iterations per instance.')
@click.option('--output', type=click.Path(), help='JSON report destination.')
@click.pass_context
@handle_errors
def verify(ctx, sizes, seeds, psk_order, admm_iters, output):
    '''Rank, feasibility and ADMM checks; exits nonzero on any failure.'''

    report = run_all(
        sizes=[parse_size(size) for size in sizes] or None,
        seeds=range(seeds) if seeds else None,
        psk_order=int(psk_order) if psk_order else None,
        admm_iters=admm_iters)

    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        with open(output, 'w') as out:
            out.write(report.to_json(indent=4))

    for case in report.cases:
        status = 'ok' if case.passed else 'FAIL'
        click.echo(f'{status:4} {case.name} {case.dims}')
    click.echo(f'{len(report.cases) - len(report.failures)}/{len(report.cases)} cases passed')

    if not report.passed:
        ctx.exit(1)


@cli.command()
@click.argument('path', type=click.Path(exists=True, dir_okay=False))
@click.option('--axis-title', default='SNR (dB)')
@handle_errors
def plot(path, axis_title):
    '''Render a saved SER table as an HTML figure.'''

    table = results.read_results(path)
    target = Path(path).with_suffix('.html')
    figures.write_figures(target, figures.ser_figure(table, axis_title))

    for _, row in table.iterrows():
        ser = ser_with_uncertainty(row['errors'], row['symbols'])
        click.echo(f"{row['scheme']} @ {row['axis']}: SER {ser.n:.3e} +/- {ser.s:.1e}")
    click.echo(f'wrote {target}')


if __name__ == '__main__':
    cli()
