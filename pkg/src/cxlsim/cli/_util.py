"""CXLSim CLI Helpers."""


from functools import wraps
from pathlib import Path
from sys import version_info
from typing import Callable, Optional

import click

from ..errors import CxlSimError, MonitorViolation
from ..fabric.topology import Topology, parse_topology
from ..util.config import default_seed

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'EXIT_FAILURE', 'PREFIX_TAIL', 'reported', 'read_topology', 'seed_or_env'


EXIT_FAILURE: int = 1

# trace records echoed before a monitor violation
PREFIX_TAIL: int = 20


def reported(command: Callable) -> Callable:
    """Report CXLSim errors on stderr and exit 1 (usage errors stay click's exit 2)."""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except MonitorViolation as err:
            for record in err.prefix[-PREFIX_TAIL:]:
                click.echo(record, err=True)
            click.echo(f'VIOLATION {err}', err=True)
        except CxlSimError as err:
            click.echo(f'ERROR {err}', err=True)
        raise click.exceptions.Exit(EXIT_FAILURE)

    return wrapper


def read_topology(path: str, validate: bool = True) -> Topology:
    return parse_topology(Path(path).read_text(encoding='utf-8'), validate=validate)


def seed_or_env(seed: Optional[int]) -> int:
    return default_seed() if seed is None else seed
