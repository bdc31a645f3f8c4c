"""CXLSim Flit Codec: wire formats, integrity fields & the slot packer."""


from sys import version_info

from .codec import (DecodedFlit, FEC_PLACEHOLDER, FlitHeader, ReplayCommand, Slot,
                    decode_flit, empty_slots, encode_flit, format_flit_hex,
                    parse_flit_hex)
from .crc import crc16, crc48, crc64
from .modes import SLOT_BYTES, FlitLayout, FlitMode, SlotKind, layout_for
from .packer import (DATA_SLOTS_PER_LINE, PackedFlit, SlotPacker, header_cost,
                     pack_slots_greedy)
from .protocol_id import (CODEWORDS, MIN_DISTANCE, ProtocolIdKind,
                          decode_protocol_id, encode_protocol_id)
from .replay import ReplayBuffer

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DecodedFlit', 'FEC_PLACEHOLDER', 'FlitHeader', 'ReplayCommand', 'Slot',
    'decode_flit', 'empty_slots', 'encode_flit', 'format_flit_hex', 'parse_flit_hex',
    'crc16', 'crc48', 'crc64',
    'SLOT_BYTES', 'FlitLayout', 'FlitMode', 'SlotKind', 'layout_for',
    'DATA_SLOTS_PER_LINE', 'PackedFlit', 'SlotPacker', 'header_cost',
    'pack_slots_greedy',
    'CODEWORDS', 'MIN_DISTANCE', 'ProtocolIdKind', 'decode_protocol_id',
    'encode_protocol_id',
    'ReplayBuffer',
)
