"""CXLSim Flit Codec."""


from dataclasses import dataclass, field
from enum import IntEnum
from sys import version_info
from typing import List, Optional, Tuple   # Py3.9+: use generic types

from ..errors import CrcMismatch, FlitError, SlotGrammarViolation
from .crc import crc16, crc48, crc64
from .modes import FlitLayout, FlitMode, SlotKind, layout_for
from .protocol_id import ProtocolIdKind, decode_protocol_id, encode_protocol_id

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'FEC_PLACEHOLDER',
    'SEQ_MASK',
    'ReplayCommand',
    'FlitHeader',
    'Slot',
    'DecodedFlit',
    'empty_slots',
    'encode_flit',
    'decode_flit',
    'format_flit_hex',
    'parse_flit_hex',
)


FEC_PLACEHOLDER: bytes = bytes(6)

_KIND_CODES: Tuple[ProtocolIdKind, ...] = (ProtocolIdKind.IO, ProtocolIdKind.CACHEMEM,
                                           ProtocolIdKind.ALMP, ProtocolIdKind.NULL)
SEQ_MASK: int = (1 << 10) - 1


class ReplayCommand(IntEnum):
    """Reliable-delivery control carried in the 256B flit Hdr."""

    SEQ = 0
    ACK = 1
    NAK = 2
    REPLAY = 3


@dataclass(frozen=True)
class FlitHeader:
    """Flit type and link-layer control.

    68B flits carry only `kind`/`eds` (as the protocol ID); 256B formats pack
    kind (2 bits), EDS (1), replay command (2) and a 10-bit sequence number.
    """

    kind: ProtocolIdKind = ProtocolIdKind.NULL
    eds: bool = False
    replay: ReplayCommand = ReplayCommand.SEQ
    seq: int = 0

    def __post_init__(self):
        assert 0 <= self.seq <= SEQ_MASK, ValueError(f'*** SEQ {self.seq} ***')

    def to_bytes(self) -> bytes:
        word = ((_KIND_CODES.index(self.kind) << 14) | (int(self.eds) << 13) |
                (int(self.replay) << 11) | self.seq)
        return word.to_bytes(length=2, byteorder='big')

    @classmethod
    def from_bytes(cls, data: bytes) -> 'FlitHeader':
        word = int.from_bytes(data, byteorder='big')
        return cls(kind=_KIND_CODES[word >> 14], eds=bool((word >> 13) & 1),
                   replay=ReplayCommand((word >> 11) & 3), seq=word & SEQ_MASK)


@dataclass(frozen=True)
class Slot:
    kind: SlotKind
    payload: bytes


@dataclass(frozen=True)
class DecodedFlit:
    """Decoded flit; for F128LO an invalid odd half leaves only even slots."""

    mode: FlitMode
    header: FlitHeader
    slots: Tuple[Slot, ...]
    odd_error: Optional[CrcMismatch] = field(default=None, compare=False)

    @property
    def complete(self) -> bool:
        return self.odd_error is None


def empty_slots(mode: FlitMode) -> List[Slot]:
    """All-NULL slot filling for a mode."""
    layout = layout_for(mode)
    return [Slot(kind=k, payload=bytes(n)) for k, n in zip(layout.kinds, layout.sizes)]


def _check_grammar(layout: FlitLayout, slots: Sequence[Slot]):
    if len(slots) != layout.slot_count:
        raise SlotGrammarViolation(
            f'{layout.mode.name} NEEDS {layout.slot_count} SLOTS, GOT {len(slots)}')

    for i, (slot, kind, size) in enumerate(zip(slots, layout.kinds, layout.sizes)):
        # an all-data 68B flit carries data in slot 0
        legal = (slot.kind is kind or
                 (layout.mode is FlitMode.F68 and i == 0 and slot.kind is SlotKind.G))
        if not legal:
            raise SlotGrammarViolation(
                f'{layout.mode.name} SLOT {i} MUST BE {kind.value}, GOT {slot.kind.value}')
        if len(slot.payload) != size:
            raise SlotGrammarViolation(
                f'{layout.mode.name} SLOT {i} NEEDS {size} BYTES, GOT {len(slot.payload)}')


def encode_flit(mode: FlitMode, header: FlitHeader, slots: Sequence[Slot]) -> bytes:
    """Byte-exact flit image with CRC fields computed."""
    layout = layout_for(mode)
    _check_grammar(layout, slots)
    body = b''.join(s.payload for s in slots)

    if mode is FlitMode.F68:
        assert header.replay is ReplayCommand.SEQ and header.seq == 0, \
            ValueError('*** 68B FLITS CARRY NO REPLAY FIELDS IN THE PROTOCOL ID ***')
        return (encode_protocol_id(kind=header.kind, eds=header.eds) + body +
                crc16(body).to_bytes(length=2, byteorder='big'))

    if mode is FlitMode.F256:
        covered = header.to_bytes() + body
        return covered + FEC_PLACEHOLDER + crc64(covered).to_bytes(length=8, byteorder='big')

    even_bytes = sum(layout.sizes[:layout.even_slots])
    even = header.to_bytes() + body[:even_bytes]
    odd = body[even_bytes:] + bytes(4) + FEC_PLACEHOLDER
    return (even + crc48(even).to_bytes(length=6, byteorder='big') +
            odd + crc48(odd).to_bytes(length=6, byteorder='big'))


def _split_slots(layout: FlitLayout, body: bytes, start: int, stop: int) -> List[Slot]:
    slots, offset = [], 0
    for kind, size in zip(layout.kinds[start:stop], layout.sizes[start:stop]):
        slots.append(Slot(kind=kind, payload=body[offset:offset + size]))
        offset += size
    return slots


def _with_data_slot0(slots: List[Slot], header_slot0: bool) -> List[Slot]:
    if header_slot0:
        return slots
    return [Slot(kind=SlotKind.G, payload=slots[0].payload)] + slots[1:]


def decode_flit(mode: FlitMode, data: bytes, slot0_is_data: bool = False) -> DecodedFlit:
    """Slots of a flit image, verifying integrity fields.

    `slot0_is_data` tells a 68B decoder that slot 0 of this flit carries data
    (all-data flits are signalled out of band by the preceding header slot).
    """
    layout = layout_for(mode)
    if len(data) != mode.flit_bytes:
        raise FlitError(f'{mode.name} FLIT NEEDS {mode.flit_bytes} BYTES, GOT {len(data)}')

    if mode is FlitMode.F68:
        kind, eds = decode_protocol_id(data[:2])
        body = data[2:66]
        if crc16(body) != int.from_bytes(data[66:], byteorder='big'):
            raise CrcMismatch('68B FLIT CRC MISMATCH')
        slots = _with_data_slot0(_split_slots(layout, body, 0, 4),
                                 header_slot0=not slot0_is_data)
        return DecodedFlit(mode=mode, header=FlitHeader(kind=kind, eds=eds),
                           slots=tuple(slots))

    if mode is FlitMode.F256:
        covered = data[:242]
        if crc64(covered) != int.from_bytes(data[248:], byteorder='big'):
            raise CrcMismatch('256B FLIT CRC MISMATCH')
        return DecodedFlit(mode=mode, header=FlitHeader.from_bytes(covered[:2]),
                           slots=tuple(_split_slots(layout, covered[2:], 0, 15)))

    even, odd = data[:128], data[128:]
    if crc48(even[:122]) != int.from_bytes(even[122:], byteorder='big'):
        raise CrcMismatch('LATENCY-OPTIMIZED EVEN HALF CRC MISMATCH', half=0)

    header = FlitHeader.from_bytes(even[:2])
    slots = _split_slots(layout, even[2:122], 0, layout.even_slots)

    if crc48(odd[:122]) != int.from_bytes(odd[122:], byteorder='big'):
        return DecodedFlit(mode=mode, header=header, slots=tuple(slots),
                           odd_error=CrcMismatch('LATENCY-OPTIMIZED ODD HALF CRC MISMATCH',
                                                 half=1))

    slots += _split_slots(layout, odd[:112], layout.even_slots, layout.slot_count)
    return DecodedFlit(mode=mode, header=header, slots=tuple(slots))


def format_flit_hex(mode: FlitMode, kind: ProtocolIdKind, data: bytes) -> str:
    """`FLIT <mode> <protocol_id_kind> <hex bytes>` trace line."""
    return f'FLIT {mode.value} {kind.value} {data.hex()}'


def parse_flit_hex(line: str) -> Tuple[FlitMode, ProtocolIdKind, bytes]:
    tag, mode, kind, hex_bytes = line.split()
    if tag != 'FLIT':
        raise FlitError(f'NOT A FLIT LINE: {line!r}')
    return FlitMode.parse(mode), ProtocolIdKind(kind), bytes.fromhex(hex_bytes)
