"""CXLSim CXL.mem Sharing Domain.

Hosts and one memory device joined by per-host links.  Each link direction
is a single FIFO carrying all CXL.mem channels in send order.
"""


from collections import deque
from dataclasses import dataclass
import logging
from sys import version_info
from typing import Deque, Dict, List, Optional   # Py3.9+: use generic types

from numpy.random import Generator

from ..protocol.address import Address
from ..protocol.fields import CacheState
from ..protocol.message import Message
from .device import Bias, MemDevice
from .directory import DirectoryMonitor, DirState
from .host import HostMemAgent
from .region import HdmKind

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Link',
    'MemDomain',
    'bias_flip',
    'run_random_workload',
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Link:
    host: int
    upstream: bool   # device -> host


class MemDomain:
    """Hosts ↔ memory device, with a transcript of every delivery and directory change."""

    def __init__(self, device: MemDevice, host_ids: Sequence[int] = (0,)):
        self.device: MemDevice = device

        def needs_cmp(line: int) -> bool:
            kind = device.region_of(Address(hpa=line)).kind
            return kind is not HdmKind.HDM_H or device.device_type == 2

        self.hosts: Dict[int, HostMemAgent] = {h: HostMemAgent(host_id=h, needs_cmp=needs_cmp)
                                               for h in host_ids}
        self.down: Dict[int, Deque[Message]] = {h: deque() for h in host_ids}
        self.up: Dict[int, Deque[Message]] = {h: deque() for h in host_ids}
        self.transcript: List[str] = []

    def _name(self, host: int) -> str:
        return self.hosts[host].name

    # ACTIONS
    # =======
    def send_down(self, host: int, msgs: Sequence[Message]):
        self.down[host].extend(msgs)

    def _send_up(self, msgs: Sequence[Message]):
        for msg in msgs:
            host = msg.dpid if msg.dpid is not None else next(iter(self.hosts))
            self.up[host].append(msg)

    def read(self, host: int, address: Address, exclusive: bool = False, **kwargs) -> Message:
        msg = self.hosts[host].read(address, exclusive=exclusive, **kwargs)
        self.send_down(host, [msg])
        return msg

    def evict(self, host: int, address: Address) -> Message:
        msg = self.hosts[host].evict(address)
        self.send_down(host, [msg])
        return msg

    def store(self, host: int, address: Address, value: int):
        self.hosts[host].store(address, value)

    def links(self) -> List[Link]:
        """Links with a message ready."""
        return ([Link(host=h, upstream=False) for h, q in self.down.items() if q] +
                [Link(host=h, upstream=True) for h, q in self.up.items() if q])

    def deliver(self, link: Link) -> Message:
        if link.upstream:
            msg = self.up[link.host].popleft()
            self.transcript.append(f'{self.device.name} -> {self._name(link.host)}: '
                                   f'{msg.opcode.value} A={msg.address}')
            self.send_down(link.host, self.hosts[link.host].receive(msg))
        else:
            msg = self.down[link.host].popleft()
            before = self.device.directory.entry(msg.line) if self.device.directory else None
            before = before and (before.state, frozenset(before.sharers))
            self.transcript.append(f'{self._name(link.host)} -> {self.device.name}: '
                                   f'{msg.opcode.value} A={msg.address}')
            self._send_up(self.device.receive(msg))
            if self.device.directory is not None:
                after = self.device.directory.entry(msg.line)
                if (after.state, frozenset(after.sharers)) != before:
                    self.transcript.append(f'DIR A={msg.address} {self.directory_state(msg.line)}')
        return msg

    def drain(self, rng: Optional[Generator] = None, limit: int = 100_000,
              monitor: Optional[DirectoryMonitor] = None) -> int:
        """Deliver until quiet, in link order or picking links at random."""
        n = 0
        while True:
            ready = self.links()
            if not ready:
                return n
            assert n < limit, ValueError(f'*** NO QUIESCENCE AFTER {limit} DELIVERIES ***')
            self.deliver(ready[int(rng.integers(len(ready)))] if rng is not None else ready[0])
            if monitor is not None:
                monitor.check(self, prefix=self.transcript)
            n += 1

    # STATE
    # =====
    def directory_state(self, line: int) -> str:
        entry = self.device.directory.entry(line)
        if entry.state is DirState.I:
            return 'I'
        names = ','.join(self._name(h) for h in sorted(self.device.directory.sharers(line)))
        return f'{entry.state.value}{{{names}}}'

    @property
    def quiescent(self) -> bool:
        return (not any(self.down.values()) and not any(self.up.values()) and
                all(h.idle for h in self.hosts.values()) and not self.device.bi_pending)

    def host_states(self, line: int) -> Dict[str, CacheState]:
        return {h.name: h.state(Address(hpa=line)) for h in self.hosts.values()}


def bias_flip(domain: MemDomain, address: Address) -> List[str]:
    """Run the device-initiated bias flip for an HDM-D line; returns its transcript."""
    device = domain.device
    if device.bias_of(address) is Bias.DEVICE:
        return []

    start = len(domain.transcript)
    host = next(iter(domain.hosts))
    for msg in device.start_bias_flip(address):
        domain.up[host].append(msg)
    domain.drain()
    assert device.bias_of(address) is Bias.DEVICE, \
        ValueError(f'*** BIAS FLIP OF {address} DID NOT COMPLETE ***')
    return domain.transcript[start:]


def run_random_workload(domain: MemDomain, rng: Generator, lines: Sequence[Address],
                        steps: int = 100, monitor: Optional[DirectoryMonitor] = None) -> int:
    """Random host reads/stores/evictions interleaved with random deliveries.

    Returns the number of host actions issued.  With a monitor, the directory
    is checked after every step and once more at quiescence.
    """
    actions = 0
    hosts = sorted(domain.hosts)
    for _ in range(steps):
        ready = domain.links()
        if ready and rng.random() < 0.5:
            domain.deliver(ready[int(rng.integers(len(ready)))])
        else:
            host = domain.hosts[hosts[int(rng.integers(len(hosts)))]]
            address = lines[int(rng.integers(len(lines)))]
            if address.line in host.pending:
                continue
            state = host.state(address)
            if not state.valid:
                domain.read(host.host_id, address, exclusive=bool(rng.integers(2)))
            elif state.exclusive and rng.random() < 0.5:
                domain.store(host.host_id, address, value=int(rng.integers(1, 1 << 16)))
            else:
                domain.evict(host.host_id, address)
            actions += 1
        if monitor is not None:
            monitor.check(domain, prefix=domain.transcript)

    domain.drain(rng=rng, monitor=monitor)
    return actions
