"""CXLSim Message Field Enumerations."""


from enum import Enum
from sys import version_info

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'CacheState', 'DevLoad', 'MetaField'


class CacheState(Enum):
    """MESI line state."""

    M = 'M'
    E = 'E'
    S = 'S'
    I = 'I'   # noqa: E741

    @property
    def valid(self) -> bool:
        return self is not CacheState.I

    @property
    def exclusive(self) -> bool:
        return self in (CacheState.M, CacheState.E)


class DevLoad(Enum):
    """Device load indication carried in S2M responses."""

    LIGHT = 'Light'
    OPTIMAL = 'Optimal'
    MODERATE = 'Moderate'
    SEVERE = 'Severe'


class MetaField(Enum):
    """What an M2S request does with the line's 2-bit meta value."""

    NO_OP = 'No-Op'
    META0_STATE = 'Meta0-State'
