"""CXLSim CXL.cache Coherence Domain.

One host home agent and up to 16 device caches (CacheIDs) below one host
port, connected by per-device D2H and H2D channel FIFOs.  Every step is one
atomic action: a device issue or store, a host CPU access, or the delivery of
the head message of one channel.
"""


from dataclasses import dataclass
from enum import Enum
import logging
from sys import version_info
from typing import Dict, List, Optional, Tuple   # Py3.9+: use generic types

from ..protocol.address import Address, MAX_CACHE_IDS
from ..protocol.channels import Channel
from ..protocol.message import Message
from ..protocol.opcodes import D2HReq
from .device import DeviceCache
from .host import HomeAgent, PermissionMap
from .ordering import ChannelQueues, H2DChannels

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Direction',
    'Delivery',
    'ReadRecord',
    'CacheDomain',
)


logger = logging.getLogger(__name__)


D2H_CHANNELS: Tuple[Channel, ...] = (Channel.D2H_REQ, Channel.D2H_RSP, Channel.D2H_DATA)


class Direction(Enum):
    D2H = 'D2H'
    H2D = 'H2D'


@dataclass(frozen=True)
class Delivery:
    """A deliverable channel head: direction, device CacheID, channel."""

    direction: Direction
    cache_id: int
    channel: Channel


@dataclass(frozen=True)
class ReadRecord:
    agent: str
    line: int
    value: int
    expected: int

    @property
    def ok(self) -> bool:
        return self.value == self.expected


class CacheDomain:   # pylint: disable=too-many-instance-attributes
    """Host + device caches + the channels between them."""

    def __init__(self, n_devices: int = 2, sf_capacity: int = 4096, go_push: bool = True,
                 permissions: Optional[PermissionMap] = None):
        assert 1 <= n_devices <= MAX_CACHE_IDS, \
            ValueError(f'*** {n_devices} CACHING DEVICES: AT MOST {MAX_CACHE_IDS} PER PORT ***')

        self.host: HomeAgent = HomeAgent(sf_capacity=sf_capacity, permissions=permissions)
        self.devices: List[DeviceCache] = [
            DeviceCache(cache_id=i, permitted=self.host.permissions.for_device(i))
            for i in range(n_devices)]

        self.h2d: Dict[int, H2DChannels] = {i: H2DChannels(go_push=go_push)
                                            for i in range(n_devices)}
        self.d2h: Dict[int, ChannelQueues] = {i: ChannelQueues(channels=D2H_CHANNELS)
                                              for i in range(n_devices)}

        # last globally-observed value per line (memory starts zeroed)
        self.latest: Dict[int, int] = {}
        self.reads: List[ReadRecord] = []
        # (snoop, earlier GO) pairs delivered out of order
        self.go_push_violations: List[Tuple[Message, Message]] = []

    # ACTIONS
    # =======
    def issue(self, cache_id: int, opcode: D2HReq, address: Address, **kwargs) -> Message:
        msg = self.devices[cache_id].issue(opcode=opcode, address=address, **kwargs)
        self.d2h[cache_id].send(msg)
        self._observe()
        return msg

    def store(self, cache_id: int, address: Address, value: int):
        self.devices[cache_id].store(address=address, value=value)
        self._observe()

    def host_access(self, address: Address, exclusive: bool,
                    store_value: Optional[int] = None) -> List[Message]:
        out = self.host.local_access(address=address, exclusive=exclusive,
                                     store_value=store_value)
        self._route(out)
        self._observe()
        return out

    def deliverable(self) -> List[Delivery]:
        out = []
        for cache_id in range(len(self.devices)):
            out.extend(Delivery(direction=Direction.H2D, cache_id=cache_id, channel=c)
                       for c in self.h2d[cache_id].deliverable())
            out.extend(Delivery(direction=Direction.D2H, cache_id=cache_id, channel=c)
                       for c in self.d2h[cache_id].deliverable())
        return out

    def deliver(self, delivery: Delivery) -> Message:
        """Pop one channel head and let its receiver react."""
        if delivery.direction is Direction.H2D:
            channels = self.h2d[delivery.cache_id]
            if delivery.channel is Channel.H2D_REQ:
                overtakes, go = channels.head_violates_go_push()
                if overtakes:
                    self.go_push_violations.append((channels.queues[Channel.H2D_REQ][0].msg, go))
            msg = channels.pop(delivery.channel)
            self.d2h[delivery.cache_id].send_all(self.devices[delivery.cache_id].receive(msg))

        else:
            msg = self.d2h[delivery.cache_id].pop(delivery.channel)
            self._route(self.host.receive(msg))

        logger.debug('%s %s', delivery.direction.value, msg.describe())
        self._observe()
        return msg

    def drain(self, limit: int = 100_000) -> int:
        """Deliver until no channel holds a message; returns the number of deliveries."""
        n = 0
        while True:
            ready = self.deliverable()
            if not ready:
                return n
            assert n < limit, ValueError(f'*** NO QUIESCENCE AFTER {limit} DELIVERIES ***')
            self.deliver(ready[0])
            n += 1

    # STATE
    # =====
    def _route(self, msgs: Sequence[Message]):
        for msg in msgs:
            self.h2d[msg.cache_id].send(msg)

    def _observe(self):
        """Order completed reads and stores against the per-line write log."""
        agents = [(dev.name, dev) for dev in self.devices] + [(self.host.name, self.host)]
        for name, agent in agents:
            for line, value in agent.observed_reads:
                self.reads.append(ReadRecord(agent=name, line=line, value=value,
                                             expected=self.latest.get(line, 0)))
            for line, value in agent.observed_writes:
                self.latest[line] = value
            agent.observed_reads.clear()
            agent.observed_writes.clear()

    @property
    def quiescent(self) -> bool:
        return (not any(self.h2d.values()) and not any(self.d2h.values()) and
                self.host.idle and not any(dev.pending for dev in self.devices))

    def in_flight(self) -> int:
        return sum(len(q) for q in self.h2d.values()) + sum(len(q) for q in self.d2h.values())

    def fingerprint(self) -> tuple:
        """Hashable state of the whole domain (agents, channel contents, write log)."""
        return (tuple(dev.snapshot() for dev in self.devices),
                self.host.snapshot(),
                tuple(self.h2d[i].snapshot() for i in sorted(self.h2d)),
                tuple(self.d2h[i].snapshot() for i in sorted(self.d2h)),
                tuple(sorted(self.latest.items())))
