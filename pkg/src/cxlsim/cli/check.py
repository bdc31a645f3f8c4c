"""CXLSim Checking CLI: I/O ordering traces & topologies."""


from pathlib import Path
from typing import Optional

import click

from ..fabric.pbr import build_routing_tables, routing_gaps
from ..fabric.topology import validate_topology
from ..io.ordering import OrderingMode
from ..io.trace import check_trace as check_io_trace, parse_io_trace
from ._util import EXIT_FAILURE, read_topology, reported


@click.command(name='check-trace',
               cls=click.Command,
               context_settings=None,
               help='CXLSim CLI: Check a CXL.io Ordering Trace >>>',
               epilog='^^^ CXLSim CLI: Check a CXL.io Ordering Trace',
               short_help='CXLSim Check-Trace',
               options_metavar='[OPTIONS]',
               add_help_option=True,
               hidden=False,
               deprecated=False)
@click.argument('trace_file',
                cls=click.Argument,
                type=click.Path(exists=True, dir_okay=False),
                metavar='TRACE_FILE')
@click.option('--mode',
              cls=click.Option,
              type=click.Choice([m.value for m in OrderingMode]),
              default=None,
              help='Ordering rules [default: the trace\'s MODE line, else legacy]')
@reported
def check_trace(trace_file: str, mode: Optional[str] = None):
    """Run the producer-consumer and synchronization checkers over a trace."""
    trace = parse_io_trace(Path(trace_file).read_text(encoding='utf-8'))
    if mode is not None:
        trace.mode = OrderingMode(mode)

    violations = check_io_trace(trace)
    for violation in violations:
        click.echo(f'VIOLATION {violation}')
    if violations:
        raise click.exceptions.Exit(EXIT_FAILURE)
    click.echo(f'OK: {len(trace.events)} event(s), {trace.mode.value} ordering')


@click.command(name='validate',
               cls=click.Command,
               context_settings=None,
               help='CXLSim CLI: Validate a Topology >>>',
               epilog='^^^ CXLSim CLI: Validate a Topology',
               short_help='CXLSim Validate',
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
@reported
def validate(topology: str):
    """Dependence-graph and routing-completeness checks."""
    parsed = read_topology(topology, validate=False)
    problems = validate_topology(parsed)
    for switch, pids in sorted(routing_gaps(parsed, build_routing_tables(parsed)).items()):
        problems.append(f'{switch}: no route to PID(s) {", ".join(map(str, pids))}')

    for problem in problems:
        click.echo(f'INVALID {problem}')
    if problems:
        raise click.exceptions.Exit(EXIT_FAILURE)
    click.echo(f'OK: {parsed.summary()}')
