"""CXLSim Flit Replay Buffer.

Transmitted flits are held until acknowledged; a NAK (or a receiver-detected
CRC error) replays every unacknowledged flit from the failing sequence number
on.  The simulated link is lossless unless an error rate is set.
"""


from collections import OrderedDict
from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import List, Optional   # Py3.9+: use generic types

import numpy

from .codec import SEQ_MASK

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'ReplayBuffer', 'ReplayStats'


logger = logging.getLogger(__name__)


@dataclass
class ReplayStats:
    sent: int = 0
    corrupted: int = 0
    replayed: int = 0


@dataclass
class ReplayBuffer:
    """Sender-side retry buffer with an optional seeded bit-error model."""

    capacity: int = 64
    error_rate: float = 0.0
    rng: Optional[numpy.random.Generator] = None

    stats: ReplayStats = field(default_factory=ReplayStats)
    _next_seq: int = 0
    _unacked: 'OrderedDict[int, bytes]' = field(default_factory=OrderedDict)

    def __post_init__(self):
        assert 0 <= self.error_rate < 1, ValueError(f'*** ERROR RATE {self.error_rate} ***')
        if self.error_rate and self.rng is None:
            self.rng = numpy.random.default_rng()

    @property
    def full(self) -> bool:
        return len(self._unacked) >= self.capacity

    def send(self, flit: bytes) -> int:
        """Record a flit as transmitted; returns its sequence number."""
        assert not self.full, ValueError('*** REPLAY BUFFER FULL ***')
        seq = self._next_seq
        self._unacked[seq] = flit
        self._next_seq = (seq + 1) & SEQ_MASK
        self.stats.sent += 1
        return seq

    def corrupt(self, flit: bytes) -> bool:
        """Whether the link damages this transmission."""
        if not self.error_rate:
            return False
        hit = bool(self.rng.random() < self.error_rate)
        self.stats.corrupted += hit
        return hit

    def ack(self, seq: int):
        """Release every flit up to and including `seq`."""
        while self._unacked:
            first = next(iter(self._unacked))
            self._unacked.popitem(last=False)
            if first == seq:
                break

    def nak(self, seq: int) -> List[bytes]:
        """Flits to retransmit, from `seq` onwards in send order."""
        if seq not in self._unacked:
            return []
        keys = list(self._unacked)
        flits = [self._unacked[k] for k in keys[keys.index(seq):]]
        self.stats.replayed += len(flits)
        logger.debug('NAK %d: replaying %d flits', seq, len(flits))
        return flits

    def __len__(self) -> int:
        return len(self._unacked)
