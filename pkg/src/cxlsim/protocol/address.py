"""CXLSim Addresses & Field Widths."""


from dataclasses import dataclass
from sys import version_info

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'HPA_BITS', 'LINE_BYTES', 'LINE_SHIFT',
    'TAG_BITS', 'LD_ID_BITS', 'CACHE_ID_BITS', 'PID_BITS', 'META_BITS',
    'MAX_LDS', 'MAX_PIDS', 'MAX_CACHE_IDS',
    'Address',
    'line_data',
    'line_value',
)


HPA_BITS: int = 64
LINE_BYTES: int = 64
LINE_SHIFT: int = 6

TAG_BITS: int = 16
LD_ID_BITS: int = 4
CACHE_ID_BITS: int = 4
PID_BITS: int = 12
META_BITS: int = 2

MAX_LDS: int = 1 << LD_ID_BITS
MAX_CACHE_IDS: int = 1 << CACHE_ID_BITS
MAX_PIDS: int = 1 << PID_BITS

_HPA_MASK: int = (1 << HPA_BITS) - 1
_LINE_MASK: int = _HPA_MASK & ~(LINE_BYTES - 1)


@dataclass(frozen=True, order=True)
class Address:
    """64-bit host physical address; coherence keys on `line`."""

    hpa: int

    def __post_init__(self):
        assert 0 <= self.hpa <= _HPA_MASK, \
            ValueError(f'*** HPA {self.hpa:#x} NOT 64-BIT ***')

    @property
    def line(self) -> int:
        return self.hpa & _LINE_MASK

    @property
    def line_index(self) -> int:
        return self.hpa >> LINE_SHIFT

    @classmethod
    def of_line(cls, line_index: int) -> 'Address':
        return cls(hpa=line_index << LINE_SHIFT)

    def line_address(self) -> 'Address':
        """Same address with the sub-line offset cleared."""
        return Address(hpa=self.line)

    def __str__(self) -> str:
        return f'{self.line:#x}'


def line_data(value: int) -> bytes:
    """64-byte line image carrying an integer value token."""
    return (value & ((1 << 64) - 1)).to_bytes(length=8, byteorder='little') * 8


def line_value(data: bytes) -> int:
    """Inverse of `line_data` (first 8 bytes)."""
    assert len(data) == LINE_BYTES, ValueError(f'*** LINE OF {len(data)} BYTES ***')
    return int.from_bytes(data[:8], byteorder='little')
