"""CXLSim Tables CLI."""


import click

from ..flit.modes import FlitMode
from ..perf.link import LinkConfig
from ..perf.tables import TABLE_NAMES, build_table, render_table
from ._util import reported


@click.command(name='tables',
               cls=click.Command,
               context_settings=None,
               help='CXLSim CLI: Performance Tables >>>',
               epilog='^^^ CXLSim CLI: Performance Tables',
               short_help='CXLSim Tables',
               options_metavar='[OPTIONS]',
               add_help_option=True,
               hidden=False,
               deprecated=False)
@click.option('--table',
              cls=click.Option,
              type=click.Choice(TABLE_NAMES),
              required=True,
              help='Table to emit',
              metavar='TABLE')
@click.option('--flit',
              cls=click.Option,
              type=click.Choice([m.value for m in FlitMode]),
              default=FlitMode.F68.value,
              show_default=True,
              help='Flit mode')
@click.option('--width',
              cls=click.Option,
              type=click.Choice(['16', '8', '4', '2', '1']),
              default='16',
              show_default=True,
              help='Link width (lanes)')
@click.option('--gts',
              cls=click.Option,
              type=click.Choice(['64', '32', '16', '8']),
              default='32',
              show_default=True,
              help='Link rate (GT/s)')
@click.option('--csv',
              cls=click.Option,
              is_flag=True,
              default=False,
              help='Emit CSV instead of aligned text')
@reported
def tables(table: str, flit: str, width: str, gts: str, csv: bool):
    """Emit one performance table."""
    mode = FlitMode.parse(flit)
    link = LinkConfig(lanes=int(width), rate_gts=int(gts), flit_mode=mode)
    click.echo(render_table(build_table(table, flit=mode, link=link), csv=csv), nl=not csv)
