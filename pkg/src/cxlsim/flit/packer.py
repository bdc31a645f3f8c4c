"""CXLSim Greedy Slot Packer.

One packer per link direction.  Headers wait in per-channel FIFOs and leave
oldest first across channels; once a data-bearing header is sent its data beats
(4 slots per 64-byte line) are owed and go out in G slots ahead of new headers.

68B mode: a flit is all-data whenever at least 64 bytes are owed.  Otherwise
each slot with no data owed is a header slot: the oldest request, then the
oldest small headers that still fit.  Headers never straddle slots.

256B / latency-optimized modes: headers may straddle slot and flit boundaries;
H slots carry headers only, HS slots small headers only, and G slots carry data
when data is owed, headers otherwise, so no G slot idles while anything is
pending.  Data-preceding headers are admitted only while no more than 5 lines of
data are in flight in the window; younger headers pass the ones held back.
"""


from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
import logging
from sys import version_info
from typing import Deque, Dict, Iterable, List, Optional, Tuple   # Py3.9+: use generic types

from ..protocol.channels import Channel
from ..protocol.message import Message
from ..protocol.opcodes import S2MNDR
from .codec import Slot
from .modes import FlitLayout, FlitMode, SlotKind, layout_for

if version_info >= (3, 9):
    from collections.abc import Mapping, Sequence
else:
    from typing import Mapping, Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DATA_SLOTS_PER_LINE',
    'REQUEST_CHANNELS',
    'header_cost',
    'PackedFlit',
    'SlotPacker',
    'pack_slots_greedy',
)


logger = logging.getLogger(__name__)


DATA_SLOTS_PER_LINE: int = 4

# data lines allowed in flight per 256B window
_MAX_WINDOW_LINES: int = 5

REQUEST_CHANNELS: Tuple[Channel, ...] = (Channel.D2H_REQ, Channel.H2D_REQ,
                                         Channel.M2S_REQ, Channel.M2S_RWD)

# headers that share a 68B header slot behind a request
_SMALL_CHANNELS: Tuple[Channel, ...] = (
    Channel.H2D_DATA, Channel.D2H_DATA, Channel.S2M_DRS,
    Channel.H2D_RSP, Channel.D2H_RSP, Channel.S2M_NDR, Channel.M2S_BIRSP,
    Channel.S2M_BISNP,
)

_DATA_HEADERS: Tuple[Channel, ...] = (Channel.H2D_DATA, Channel.D2H_DATA,
                                      Channel.S2M_DRS, Channel.M2S_RWD)

_F = Fraction

_F68_COST: Dict[Channel, Fraction] = {
    Channel.D2H_REQ: _F(3, 4), Channel.H2D_REQ: _F(3, 4),
    Channel.M2S_REQ: _F(3, 4), Channel.M2S_RWD: _F(3, 4),
    Channel.D2H_RSP: _F(1, 4), Channel.D2H_DATA: _F(1, 4),
    Channel.H2D_RSP: _F(1, 4), Channel.H2D_DATA: _F(1, 4),
    Channel.S2M_NDR: _F(1, 2), Channel.S2M_DRS: _F(1, 2),
    Channel.S2M_BISNP: _F(1, 2), Channel.M2S_BIRSP: _F(1, 3),
}

_F256_COST: Dict[Channel, Fraction] = {
    Channel.D2H_REQ: _F(1), Channel.H2D_REQ: _F(1),
    Channel.M2S_REQ: _F(1), Channel.M2S_RWD: _F(1),
    Channel.D2H_RSP: _F(1, 4), Channel.D2H_DATA: _F(1, 2),
    Channel.H2D_RSP: _F(1, 4), Channel.H2D_DATA: _F(1, 4),
    Channel.S2M_NDR: _F(1, 3), Channel.S2M_DRS: _F(4, 9),
    Channel.S2M_BISNP: _F(1, 2), Channel.M2S_BIRSP: _F(1, 3),
}

_LO_COST: Dict[Channel, Fraction] = {**_F256_COST,
                                     Channel.S2M_NDR: _F(1, 4),
                                     Channel.S2M_DRS: _F(17, 28)}

# Type-2 read completions carry the granted state and pack less densely
_LO_STATEFUL_NDR_COST: Fraction = _F(3, 10)

_SMALL_HEADER_LIMIT: Fraction = _F(1, 2)


def header_cost(mode: FlitMode, channel: Channel, msg: Optional[Message] = None) -> Fraction:
    """Header size of a channel's message in 16-byte slot units."""
    if mode is FlitMode.F68:
        return _F68_COST[channel]

    if mode is FlitMode.F256:
        return _F256_COST[channel]

    if (channel is Channel.S2M_NDR and msg is not None and
            msg.opcode in (S2MNDR.Cmp_S, S2MNDR.Cmp_E)):
        return _LO_STATEFUL_NDR_COST

    return _LO_COST[channel]


@dataclass
class PackedFlit:
    """Result of packing one flit: slot usage and messages fully sent."""

    mode: FlitMode
    slot_contents: List[List[Tuple[str, Optional[Message]]]]
    data_slots: int = 0
    completed: List[Message] = field(default_factory=list)

    @property
    def is_null(self) -> bool:
        return not any(self.slot_contents)

    @property
    def all_data(self) -> bool:
        return self.data_slots == len(self.slot_contents)

    def to_slots(self) -> List[Slot]:
        """Codec slots carrying a compact rendering of what each slot holds."""
        layout = layout_for(self.mode)
        slots = []
        for i, contents in enumerate(self.slot_contents):
            kind, size = layout.kinds[i], layout.sizes[i]
            if contents and contents[0][0] == 'data':
                kind = SlotKind.G
            text = ';'.join(f'{what}:{m.opcode.value if m else "-"}' for what, m in contents)
            payload = text.encode('ascii')[:size].ljust(size, b'\0')
            slots.append(Slot(kind=kind, payload=payload))
        return slots


class SlotPacker:
    """Per-link-direction greedy slot packer."""

    def __init__(self, mode: FlitMode):
        self.mode: FlitMode = mode
        self.layout: FlitLayout = layout_for(mode)

        self.queues: Dict[Channel, Deque[Message]] = {c: deque() for c in _F68_COST}
        # arrival numbers, parallel to `queues`
        self._arrivals: Dict[Channel, Deque[int]] = {c: deque() for c in _F68_COST}
        self._next_arrival: int = 0

        # (message, remaining data slots); FIFO in header order
        self.owed: Deque[List] = deque()

        # fluid modes: header partially sent (message, remaining units)
        self.partial: Optional[List] = None

    # QUEUEING
    # ========
    def push(self, msg: Message):
        """Queue a message's header (its data follows once the header is sent)."""
        self.queues[msg.channel].append(msg)
        self._arrivals[msg.channel].append(self._next_arrival)
        self._next_arrival += 1

    def owe(self, msg: Message, slots: int = DATA_SLOTS_PER_LINE):
        """Queue data slots whose header has already been accounted for."""
        self.owed.append([msg, slots])

    @property
    def owed_slots(self) -> int:
        return sum(n for _, n in self.owed)

    @property
    def pending(self) -> bool:
        return bool(self.owed or self.partial or any(self.queues.values()))

    def __len__(self) -> int:
        return sum(len(q) for q in self.queues.values())

    def _oldest(self, channels: Iterable[Channel]) -> Optional[Channel]:
        """The channel whose head header arrived first."""
        return min((c for c in channels if self.queues[c]),
                   key=lambda c: self._arrivals[c][0], default=None)

    def _take(self, channel: Channel) -> Message:
        self._arrivals[channel].popleft()
        return self.queues[channel].popleft()

    # PACKING
    # =======
    def _send_data_slot(self, packed: PackedFlit, contents: list):
        entry = self.owed[0]
        entry[1] -= 1
        contents.append(('data', entry[0]))
        packed.data_slots += 1
        if entry[1] == 0:
            self.owed.popleft()
            packed.completed.append(entry[0])

    def _header_sent(self, msg: Message, packed: PackedFlit):
        if msg.has_data and msg.channel in _DATA_HEADERS:
            self.owe(msg)
        else:
            packed.completed.append(msg)

    def pack(self) -> PackedFlit:
        """Assign slots for the next flit (an empty queue set yields a NULL flit)."""
        packed = PackedFlit(mode=self.mode,
                            slot_contents=[[] for _ in range(self.layout.slot_count)])

        if self.mode is FlitMode.F68:
            self._pack_68(packed)
        else:
            self._pack_fluid(packed)

        return packed

    def _pack_68(self, packed: PackedFlit):
        if self.owed_slots >= DATA_SLOTS_PER_LINE:
            for contents in packed.slot_contents:
                self._send_data_slot(packed, contents)
            return

        for i, contents in enumerate(packed.slot_contents):
            if i > 0 and self.owed:
                self._send_data_slot(packed, contents)
                continue

            room = _F(1)
            channel = self._oldest(REQUEST_CHANNELS)
            if channel is None:
                channel = self._oldest(_SMALL_CHANNELS)
            while channel is not None:
                msg = self._take(channel)
                room -= _F68_COST[channel]
                contents.append(('hdr', msg))
                self._header_sent(msg, packed)
                channel = self._oldest(c for c in _SMALL_CHANNELS if _F68_COST[c] <= room)

    # fluid (256B / latency-optimized) packing
    def _data_in_flight(self) -> int:
        units = self.owed_slots
        if self.partial is not None and self.partial[0].channel in _DATA_HEADERS:
            units += DATA_SLOTS_PER_LINE
        return units

    def _next_header(self, small_only: bool) -> Optional[Message]:
        window_full = (self._data_in_flight() + DATA_SLOTS_PER_LINE >
                       _MAX_WINDOW_LINES * DATA_SLOTS_PER_LINE)
        channel = self._oldest(
            c for c in self.queues
            if not (window_full and c in _DATA_HEADERS) and
            not (small_only and header_cost(self.mode, c) > _SMALL_HEADER_LIMIT))
        return None if channel is None else self._take(channel)

    def _fill_headers(self, packed: PackedFlit, contents: list, room: Fraction,
                      small_only: bool):
        while room > 0:
            if self.partial is None:
                msg = self._next_header(small_only=small_only)
                if msg is None:
                    return
                self.partial = [msg, header_cost(self.mode, msg.channel, msg)]

            msg, remaining = self.partial
            if small_only and header_cost(self.mode, msg.channel, msg) > _SMALL_HEADER_LIMIT:
                return

            used = min(room, remaining)
            room -= used
            contents.append(('hdr', msg))
            if used == remaining:
                self.partial = None
                self._header_sent(msg, packed)
            else:
                self.partial[1] = remaining - used

    def _pack_fluid(self, packed: PackedFlit):
        for i, contents in enumerate(packed.slot_contents):
            kind = self.layout.kinds[i]
            if kind is SlotKind.G and self.owed:
                self._send_data_slot(packed, contents)
                continue

            self._fill_headers(packed, contents, room=self.layout.capacity(i),
                               small_only=kind is SlotKind.HS)


def pack_slots_greedy(pending: Mapping[Channel, Sequence[Message]],
                      mode: FlitMode) -> PackedFlit:
    """Slot assignment of one flit for the given per-channel pending headers."""
    packer = SlotPacker(mode=mode)
    for channel, messages in pending.items():
        for msg in messages:
            assert msg.channel is channel, \
                ValueError(f'*** {msg.opcode.value} QUEUED ON {channel.name} ***')
            packer.push(msg)
    return packer.pack()


