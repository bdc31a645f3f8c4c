"""CXLSim Utilities."""


from fractions import Fraction
from pathlib import Path
from sys import version_info
from typing import Union

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DATA_DIR_PATH',
    'round_half_up',
)


# shipped example topologies, FM scripts, workloads & traces
DATA_DIR_PATH: Path = Path(__file__).parent.parent / 'data'


def round_half_up(x: Union[float, Fraction], ndigits: int = 1) -> str:
    """Format a number with half-up rounding (stable across float reprs)."""
    scale = 10 ** ndigits
    scaled = Fraction(x) * scale
    n = int(scaled + Fraction(1, 2)) if scaled >= 0 else -int(-scaled + Fraction(1, 2))
    sign = '-' if n < 0 else ''
    n = abs(n)
    return (f'{sign}{n // scale}.{n % scale:0{ndigits}d}'
            if ndigits else f'{sign}{n}')
