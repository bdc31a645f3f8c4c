"""CXLSim CLI."""


from sys import version_info

import click

from .. import __version__
from ..util.config import LOG_LEVEL_ENV_VAR, default_log_level, load_env
from ..util.log import configure_logging
from .check import check_trace, validate
from .simulate import explore, simulate
from .tables import tables

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = ('cxlsim',)


@click.group(name='cxlsim',
             cls=click.Group,
             commands={'simulate': simulate,
                       'tables': tables,
                       'check-trace': check_trace,
                       'validate': validate,
                       'explore': explore},
             invoke_without_command=False,
             no_args_is_help=True,
             subcommand_metavar='CXLSIM_SUB_COMMAND',
             chain=False,
             help='CXLSim CLI >>>',
             epilog='^^^ CXLSim CLI',
             short_help='CXLSim CLI',
             options_metavar='[OPTIONS]',
             add_help_option=True,
             hidden=False,
             deprecated=False)
@click.option('--log-level',
              cls=click.Option,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None,
              required=False,
              show_default=False,
              help=f'Logging level [default: ${LOG_LEVEL_ENV_VAR} or WARNING]',
              metavar='LEVEL')
@click.version_option(version=__version__, prog_name='cxlsim', message='%(prog)s %(version)s')
def cxlsim(log_level: str = None):
    """Trigger CXLSim from CLI."""
    load_env()
    configure_logging(log_level or default_log_level())
