"""CXLSim Protocol Messages."""


from dataclasses import dataclass, field, replace
from sys import version_info
from typing import Optional, Tuple

from ..errors import UnknownOpcode
from .address import (Address, CACHE_ID_BITS, LD_ID_BITS, LINE_BYTES, META_BITS,
                      PID_BITS, TAG_BITS)
from .channels import Channel, FlowControlClass, Protocol
from .fields import CacheState, DevLoad, MetaField
from .opcodes import (IoOpcode, Opcode, ProtocolLevel, opcode_channel,
                      opcodes_for_level)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'Message', 'classify_message'


_IO_WITH_DATA = frozenset((IoOpcode.MemWr, IoOpcode.CfgWr, IoOpcode.IOWr,
                           IoOpcode.CplD, IoOpcode.UioWr))
_IO_WITHOUT_DATA = frozenset((IoOpcode.MemRd, IoOpcode.CfgRd, IoOpcode.IORd,
                              IoOpcode.Cpl, IoOpcode.UioRd, IoOpcode.UioWrCpl))


def _fits(value: Optional[int], bits: int) -> bool:
    return value is None or 0 <= value < (1 << bits)


@dataclass(frozen=True)
class Message:   # pylint: disable=too-many-instance-attributes
    """One protocol-layer transaction unit.

    `has_data` is derived from the channel when left unset; for CXL.io it
    follows the opcode (UioRdCpl may go either way, `payload_dw` decides).
    `data` carries the 64-byte line image when the message moves data.
    """

    opcode: Opcode
    address: Optional[Address] = None
    tag: int = 0

    ld_id: Optional[int] = None
    cache_id: Optional[int] = None
    spid: Optional[int] = None
    dpid: Optional[int] = None

    meta: Optional[int] = None
    meta_field: MetaField = MetaField.NO_OP
    has_data: Optional[bool] = None
    bogus: bool = False
    poison: bool = False

    data: Optional[bytes] = field(default=None, repr=False, compare=True)
    granted: Optional[CacheState] = None
    devload: Optional[DevLoad] = None
    payload_dw: int = 0
    byte_enable: Optional[int] = None   # partial writes: one bit per line byte

    def __post_init__(self):
        channel = opcode_channel(self.opcode)

        if channel.protocol is Protocol.IO:
            if self.opcode in _IO_WITH_DATA:
                expected = True
            elif self.opcode in _IO_WITHOUT_DATA:
                expected = False
            else:
                expected = self.payload_dw > 0
        else:
            expected = channel.data_bearing

        if self.has_data is None:
            object.__setattr__(self, 'has_data', expected)
        assert self.has_data == expected, \
            ValueError(f'*** {self.opcode.value}: has_data MUST BE {expected} ***')

        assert not self.bogus or channel is Channel.D2H_DATA, \
            ValueError(f'*** BOGUS FLAG ON {channel.name} ***')

        assert _fits(self.tag, TAG_BITS), ValueError(f'*** TAG {self.tag} ***')
        assert _fits(self.ld_id, LD_ID_BITS), ValueError(f'*** LD-ID {self.ld_id} ***')
        assert _fits(self.cache_id, CACHE_ID_BITS), \
            ValueError(f'*** CacheID {self.cache_id} ***')
        assert _fits(self.spid, PID_BITS), ValueError(f'*** SPID {self.spid} ***')
        assert _fits(self.dpid, PID_BITS), ValueError(f'*** DPID {self.dpid} ***')
        assert _fits(self.meta, META_BITS), ValueError(f'*** META {self.meta} ***')
        assert self.data is None or len(self.data) == LINE_BYTES, \
            ValueError(f'*** DATA OF {len(self.data)} BYTES ***')
        assert _fits(self.byte_enable, LINE_BYTES), \
            ValueError(f'*** BYTE ENABLE {self.byte_enable} ***')

    @property
    def channel(self) -> Channel:
        return opcode_channel(self.opcode)

    @property
    def protocol(self) -> Protocol:
        return self.channel.protocol

    @property
    def line(self) -> Optional[int]:
        return None if self.address is None else self.address.line

    def evolve(self, **changes) -> 'Message':
        """Copy with changed fields."""
        return replace(self, **changes)

    def describe(self) -> str:
        """Compact human-readable rendering used in trace records."""
        parts = [self.channel.name, self.opcode.value]
        if self.address is not None:
            parts.append(f'A={self.address}')
        parts.append(f'tag={self.tag}')
        for name in ('ld_id', 'cache_id', 'spid', 'dpid', 'meta'):
            value = getattr(self, name)
            if value is not None:
                parts.append(f'{name}={value}')
        if self.granted is not None:
            parts.append(f'state={self.granted.value}')
        for flag in ('bogus', 'poison'):
            if getattr(self, flag):
                parts.append(flag)
        return ' '.join(parts)


def classify_message(msg: Message,
                     level: ProtocolLevel = ProtocolLevel.CXL_3_0) \
        -> Tuple[Channel, Optional[FlowControlClass]]:
    """Channel of a message and, for CXL.io, its flow-control class."""
    if msg.opcode not in opcodes_for_level(level):
        raise UnknownOpcode(f'{msg.opcode.value} NOT IN CXL {level.value}',
                            opcode=msg.opcode, level=level)

    channel = msg.channel
    return channel, (channel.fc_class if channel.protocol is Protocol.IO else None)
