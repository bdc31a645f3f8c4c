"""CXLSim: Compute Express Link (CXL) Protocol Simulator & Performance Model."""


from sys import version_info

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = ('__version__',)


__version__: str = '0.0.0.dev0'
