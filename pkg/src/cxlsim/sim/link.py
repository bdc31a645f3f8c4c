"""CXLSim Simulated Link Direction.

A link direction owns a slot packer and serializes one flit at a time.
Messages of credited channels wait in a backlog while their channel's credit
pool is dry; a credit is taken when a header enters the packer and returned
as soon as the header starts going out in a flit.  Everything a flit completes is
delivered to the far end one flight time after the flit's last bit.

With a replay buffer attached, a flit the link damages is sent again in the
next flit time before anything else moves.
"""


from collections import deque
from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import Callable, Deque, Dict, List, Optional, Tuple   # Py3.9+: use generic types

from ..fabric.isl import CreditPool
from ..flit.codec import FlitHeader, encode_flit
from ..flit.modes import SLOT_BYTES
from ..flit.packer import PackedFlit, SlotPacker
from ..flit.protocol_id import ProtocolIdKind
from ..flit.replay import ReplayBuffer
from ..perf.link import LinkConfig, flit_time_ps
from ..protocol.channels import CACHEMEM_CHANNELS, Channel
from ..protocol.message import Message
from .engine import Component, Engine, Event, EventAction

if version_info >= (3, 9):
    from collections.abc import Mapping, Sequence
else:
    from typing import Mapping, Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'Transit', 'LinkStats', 'LinkPort', 'credit_pools'


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transit:
    """A message on its way, with the edge entity that sent it."""

    msg: Message
    source: str


@dataclass
class LinkStats:
    flits: int = 0
    data_flits: int = 0
    data_bytes: int = 0
    replays: int = 0

    # (start ps, data bytes) of every flit carrying data
    samples: List[Tuple[int, int]] = field(default_factory=list)
    first_ps: Optional[int] = None
    last_ps: Optional[int] = None

    def gbps(self, duration_ps: int) -> float:
        """Data GB/s over a duration (bytes per ns)."""
        return self.data_bytes * 1000 / duration_ps if duration_ps > 0 else 0.0

    def steady_gbps(self, flit_ps: int, trim: float = 0.1) -> float:
        """Data GB/s over the middle of the active span, `trim` cut at each end."""
        if self.first_ps is None:
            return 0.0
        span = self.last_ps - self.first_ps
        lo = self.first_ps + int(span * trim)
        hi = self.last_ps - int(span * trim)
        # whole flits starting inside [lo, hi)
        moved = sum(n for start, n in self.samples if lo <= start < hi)
        return moved * 1000 / (hi - lo) if hi - lo >= flit_ps else self.gbps(span)


def credit_pools(credits: int,
                 channels: Sequence[Channel] = tuple(CACHEMEM_CHANNELS)) -> Dict[Channel, CreditPool]:
    """One pool per credited (not preallocated) channel."""
    return {c: CreditPool(limit=credits)
            for c in sorted(channels, key=lambda c: c.name) if not c.preallocated}


class LinkPort(Component):   # pylint: disable=too-many-instance-attributes
    """One direction of a link, `src` -> `dst`."""

    def __init__(self, engine: Engine, src: str, dst: str, config: LinkConfig,
                 flight_ps: int, pools: Mapping[Channel, CreditPool],
                 label: Optional[str] = None, replay: Optional[ReplayBuffer] = None):
        super().__init__(component_id=label or f'{src}->{dst}', engine=engine)
        self.src: str = src
        self.dst: str = dst
        self.config: LinkConfig = config
        self.flit_ps: int = flit_time_ps(config)
        self.flight_ps: int = flight_ps

        self.packer: SlotPacker = SlotPacker(mode=config.flit_mode)
        self.pools: Dict[Channel, CreditPool] = dict(pools)
        self.backlog: Dict[Channel, Deque[Transit]] = {c: deque() for c in self.pools}
        self.sources: Dict[int, Deque[Transit]] = {}

        self.listeners: List[Callable[[], None]] = []
        self.stats: LinkStats = LinkStats()
        self.replay: Optional[ReplayBuffer] = replay
        self._replay_seq: Optional[int] = None

        self._busy: bool = False
        self._kick_scheduled: bool = False

    # SENDING
    # =======
    def room(self, channel: Channel) -> bool:
        """Whether a new message of the channel would go straight into the packer."""
        pool = self.pools.get(channel)
        return pool is None or (pool.available > 0 and not self.backlog[channel])

    def offer(self, transit: Transit):
        channel = transit.msg.channel
        pool = self.pools.get(channel)
        if pool is not None and (self.backlog[channel] or not pool.take()):
            self.backlog[channel].append(transit)
            return
        self._push(transit)

    def _push(self, transit: Transit):
        self.sources.setdefault(id(transit.msg), deque()).append(transit)
        self.packer.push(transit.msg)
        self._kick()

    def _kick(self):
        # pack after every same-instant offer has landed
        if not self._busy and not self._kick_scheduled:
            self._kick_scheduled = True
            self.engine.schedule(0, self.id, EventAction.TIMER)

    def _refill(self):
        for channel, waiting in self.backlog.items():
            pool = self.pools[channel]
            while waiting and pool.take():
                self._push(waiting.popleft())

    # EVENTS
    # ======
    def handle(self, event: Event):
        assert event.action is EventAction.TIMER, \
            ValueError(f'*** {self.id}: UNEXPECTED {event.action.value} ***')
        if event.payload is None:
            self._kick_scheduled = False
            self._transmit()
        else:
            self._flit_done(event.payload)

    def _transmit(self):
        if self._busy or not self.packer.pending:
            return

        queued = {c: len(self.packer.queues[c]) for c in self.pools}
        packed = self.packer.pack()
        self._busy = True
        self._account(packed)

        # headers that left the queue hand their credit back
        for channel, before in queued.items():
            for _ in range(before - len(self.packer.queues[channel])):
                self.pools[channel].give()

        self.engine.schedule(self.flit_ps, self.id, EventAction.TIMER, payload=packed)
        self._refill()
        for listener in self.listeners:
            listener()

    def _account(self, packed: PackedFlit):
        stats = self.stats
        stats.flits += 1
        if packed.data_slots:
            start = self.now
            stats.data_flits += 1
            stats.data_bytes += packed.data_slots * SLOT_BYTES
            stats.samples.append((start, packed.data_slots * SLOT_BYTES))
            if stats.first_ps is None:
                stats.first_ps = start
            stats.last_ps = start + self.flit_ps

    def _damaged(self, packed: PackedFlit) -> bool:
        if self._replay_seq is None:
            image = encode_flit(self.config.flit_mode, FlitHeader(kind=ProtocolIdKind.CACHEMEM),
                                packed.to_slots())
            self._replay_seq = self.replay.send(image)
            damaged = self.replay.corrupt(image)
        else:
            damaged = self.replay.corrupt(self.replay.nak(self._replay_seq)[0])

        if damaged:
            return True
        self.replay.ack(self._replay_seq)
        self._replay_seq = None
        return False

    def _flit_done(self, packed: PackedFlit):
        if self.replay is not None and self._damaged(packed):
            # NAKed: the same flit again
            self.stats.flits += 1
            self.stats.replays += 1
            self.engine.schedule(self.flit_ps, self.id, EventAction.TIMER, payload=packed)
            return

        self._busy = False
        delivered = [self.sources[id(msg)].popleft() for msg in packed.completed]
        for msg in packed.completed:
            if not self.sources[id(msg)]:
                del self.sources[id(msg)]
        if delivered:
            self.engine.schedule(self.flight_ps, self.dst, EventAction.DELIVER,
                                 payload=(self.id, delivered))
        self._transmit()

    @property
    def idle(self) -> bool:
        return not self._busy and not self.packer.pending and not any(self.backlog.values())
