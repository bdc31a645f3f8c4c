"""CXLSim 68B-Flit Protocol-ID Coding.

Eight 8-bit codewords (4 kinds x EDS flag) drawn from a linear [8, 4, 4] code,
so any two differ in at least 4 bits; the byte is sent twice.  Each half is
decoded to the unique codeword within distance 1; halves must agree.
"""


from enum import Enum
from itertools import combinations
from sys import version_info
from typing import Dict, Optional, Tuple   # Py3.9+: use generic types

from ..errors import Uncorrectable

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'ProtocolIdKind',
    'CODEWORDS',
    'MIN_DISTANCE',
    'encode_protocol_id',
    'decode_protocol_id',
    'hamming',
)


class ProtocolIdKind(Enum):
    IO = 'IO'
    CACHEMEM = 'CACHEMEM'
    ALMP = 'ALMP'
    NULL = 'NULL'


CODEWORDS: Dict[Tuple[ProtocolIdKind, bool], int] = {
    (ProtocolIdKind.IO, False): 0xFF,
    (ProtocolIdKind.CACHEMEM, False): 0x55,
    (ProtocolIdKind.NULL, False): 0x99,
    (ProtocolIdKind.ALMP, False): 0xCC,
    (ProtocolIdKind.IO, True): 0x0F,
    (ProtocolIdKind.CACHEMEM, True): 0xA5,
    (ProtocolIdKind.NULL, True): 0x69,
    (ProtocolIdKind.ALMP, True): 0x3C,
}

_BY_CODEWORD: Dict[int, Tuple[ProtocolIdKind, bool]] = {v: k for k, v in CODEWORDS.items()}

MIN_DISTANCE: int = min(bin(a ^ b).count('1')
                        for a, b in combinations(CODEWORDS.values(), 2))

assert MIN_DISTANCE >= 4, ValueError(f'*** PROTOCOL-ID DISTANCE {MIN_DISTANCE} ***')


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count('1')


def encode_protocol_id(kind: ProtocolIdKind, eds: bool = False) -> bytes:
    """16-bit protocol ID: the 8-bit codeword repeated."""
    codeword = CODEWORDS[(kind, eds)]
    return bytes((codeword, codeword))


def _nearest(byte: int) -> Optional[int]:
    for codeword in _BY_CODEWORD:
        if hamming(byte, codeword) <= 1:
            return codeword
    return None


def decode_protocol_id(data: bytes) -> Tuple[ProtocolIdKind, bool]:
    """(kind, eds), correcting any single-bit error in each half."""
    assert len(data) == 2, ValueError(f'*** PROTOCOL ID OF {len(data)} BYTES ***')

    first, second = _nearest(data[0]), _nearest(data[1])
    if first is None or second is None or first != second:
        raise Uncorrectable(f'PROTOCOL ID {data.hex()} UNCORRECTABLE', raw=bytes(data))

    return _BY_CODEWORD[first]
