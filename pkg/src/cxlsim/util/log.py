"""CXLSim Logging Utilities."""


import logging
from sys import version_info
from typing import Union

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'LOG_FORMAT', 'configure_logging'


LOG_FORMAT: str = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level: Union[int, str] = logging.WARNING):
    """Configure the root handler once for CLI runs."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        assert isinstance(level, int), ValueError(f'*** INVALID LOG LEVEL {level} ***')

    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    logging.getLogger('cxlsim').setLevel(level)
