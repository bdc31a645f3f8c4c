"""CXLSim Simulation CLI."""


from pathlib import Path
from typing import List, Optional   # Py3.9+: use generic types

import click
import pandas
from tabulate import tabulate

from ..flit.modes import FlitMode
from ..sim.engine import PS_PER_NS
from ..sim.explore import explore as explore_config
from ..sim.run import SimResult, run_repeated
from ..util.config import SimConfig, WorkloadConfig, as_dict, load_explore_config, \
    load_workload, parse_model
from ._util import EXIT_FAILURE, read_topology, reported, seed_or_env


def _with_flit(workloads: WorkloadConfig, flit: Optional[str]) -> WorkloadConfig:
    if flit is None:
        return workloads
    data = as_dict(workloads)
    data['sim'] = as_dict(parse_model(SimConfig, {**data['sim'], 'flit_mode': flit}))
    return parse_model(WorkloadConfig, data)


def _trace_path(path: str, result: SimResult, repeat: int) -> Path:
    out = Path(path)
    return out if repeat == 1 else out.with_name(f'{out.stem}.seed{result.seed}{out.suffix}')


def _stats_frame(results: List[SimResult]) -> pandas.DataFrame:
    if len(results) == 1:
        return results[0].stats.frame
    frames = [r.stats.frame.assign(seed=str(r.seed)) for r in results]
    frame = pandas.concat(frames, ignore_index=True)
    return frame[['seed'] + [c for c in frame.columns if c != 'seed']]


@click.command(name='simulate',
               cls=click.Command,
               context_settings=None,
               help='CXLSim CLI: Run a Simulation >>>',
               epilog='^^^ CXLSim CLI: Run a Simulation',
               short_help='CXLSim Simulate',
               options_metavar='[OPTIONS]',
               add_help_option=True,
               hidden=False,
               deprecated=False)
@click.option('--topology',
              cls=click.Option,
              type=click.Path(exists=True, dir_okay=False),
              required=True,
              help='Topology file',
              metavar='FILE')
@click.option('--workload',
              cls=click.Option,
              type=click.Path(exists=True, dir_okay=False),
              required=False,
              default=None,
              help='Workload YAML [default: no traffic]',
              metavar='FILE')
@click.option('--seed',
              cls=click.Option,
              type=int,
              default=None,
              help='Seed [default: $CXLSIM_SEED or 0]')
@click.option('--horizon-us',
              cls=click.Option,
              type=click.FloatRange(min=0, min_open=True),
              default=None,
              help='Stop after this much simulated time [default: run to completion]')
@click.option('--flit',
              cls=click.Option,
              type=click.Choice([m.value for m in FlitMode]),
              default=None,
              help='Flit mode of every link [default: the workload file\'s]')
@click.option('--trace',
              cls=click.Option,
              type=click.Path(dir_okay=False, writable=True),
              default=None,
              help='Write the message trace here',
              metavar='FILE')
@click.option('--stats',
              cls=click.Option,
              type=click.Path(dir_okay=False, writable=True),
              default=None,
              help='Write metric,scope,value,unit CSV here',
              metavar='FILE')
@click.option('--repeat',
              cls=click.Option,
              type=click.IntRange(min=1),
              default=1,
              show_default=True,
              help='Independent instances, seeded seed, seed+1, ...')
@click.option('--jobs',
              cls=click.Option,
              type=int,
              default=1,
              show_default=True,
              help='Parallel processes for --repeat')
@click.option('--csv',
              cls=click.Option,
              is_flag=True,
              default=False,
              help='Print stats as CSV instead of aligned text')
@reported
def simulate(topology: str, workload: Optional[str], seed: Optional[int],
             horizon_us: Optional[float], flit: Optional[str], trace: Optional[str],
             stats: Optional[str], repeat: int, jobs: int, csv: bool):
    """Run a scenario and report its statistics."""
    workloads = _with_flit(load_workload(workload) if workload else WorkloadConfig(), flit)
    horizon_ps = None if horizon_us is None else int(round(horizon_us * 1000 * PS_PER_NS))

    results = run_repeated(read_topology(topology), workloads, seed=seed_or_env(seed),
                           horizon_ps=horizon_ps, repeat=repeat, n_jobs=jobs)

    if trace:
        for result in results:
            _trace_path(trace, result, repeat).write_text(result.trace.render(),
                                                          encoding='utf-8')

    frame = _stats_frame(results)
    if stats:
        frame.to_csv(stats, index=False)
    if csv:
        click.echo(frame.to_csv(index=False), nl=False)
    else:
        click.echo(tabulate(frame, headers='keys', tablefmt='simple', showindex=False,
                            disable_numparse=True))


@click.command(name='explore',
               cls=click.Command,
               context_settings=None,
               help='CXLSim CLI: Exhaustive Coherence Exploration >>>',
               epilog='^^^ CXLSim CLI: Exhaustive Coherence Exploration',
               short_help='CXLSim Explore',
               options_metavar='[OPTIONS]',
               add_help_option=True,
               hidden=False,
               deprecated=False)
@click.option('--config',
              cls=click.Option,
              type=click.Path(exists=True, dir_okay=False),
              required=True,
              help='Explore YAML',
              metavar='FILE')
@click.option('--depth',
              cls=click.Option,
              type=click.IntRange(min=0),
              default=None,
              help='Schedule depth [default: the config file\'s]')
@click.option('--progress/--no-progress',
              cls=click.Option,
              default=False,
              help='Show a progress bar')
@reported
def explore(config: str, depth: Optional[int], progress: bool):
    """Enumerate every interleaving up to a depth and report violations."""
    report = explore_config(load_explore_config(config), depth=depth, progress=progress)
    click.echo(report.render())
    if not report.ok:
        raise click.exceptions.Exit(EXIT_FAILURE)
