"""CXLSim Per-Direction Channel Queues & the GO-Push Rule.

Each channel is a FIFO; channels are otherwise independent.  In the H2D
direction a snoop may not be observed before a GO the host sent earlier for
the same line.
"""


from collections import deque
from dataclasses import dataclass
from sys import version_info
from typing import Deque, Dict, Iterable, List, Optional, Tuple   # Py3.9+: use generic types

from ..protocol.channels import Channel
from ..protocol.message import Message
from ..protocol.opcodes import H2DRsp

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'GO_OPCODES',
    'ChannelQueues',
    'H2DChannels',
    'deliver_h2d',
)


GO_OPCODES = frozenset((H2DRsp.GO, H2DRsp.GO_WritePull, H2DRsp.GO_Err))


@dataclass(frozen=True)
class _Queued:
    seq: int
    msg: Message


class ChannelQueues:
    """Independent per-channel FIFOs of in-flight messages."""

    def __init__(self, channels: Iterable[Channel]):
        self.queues: Dict[Channel, Deque[_Queued]] = {c: deque() for c in channels}
        self._next_seq: int = 0

    def send(self, msg: Message):
        self.queues[msg.channel].append(_Queued(seq=self._next_seq, msg=msg))
        self._next_seq += 1

    def send_all(self, msgs: Iterable[Message]):
        for msg in msgs:
            self.send(msg)

    def blocked(self, channel: Channel) -> bool:
        # pylint: disable=unused-argument
        return False

    def deliverable(self) -> List[Channel]:
        """Channels whose head message may be observed next."""
        return [c for c, q in self.queues.items() if q and not self.blocked(c)]

    def pop(self, channel: Channel) -> Message:
        assert not self.blocked(channel), ValueError(f'*** {channel.name} HEAD IS BLOCKED ***')
        return self.queues[channel].popleft().msg

    def __len__(self) -> int:
        return sum(len(q) for q in self.queues.values())

    def __bool__(self) -> bool:
        return any(self.queues.values())

    def snapshot(self) -> tuple:
        """Queue contents with their relative send order (absolute seqs dropped)."""
        rank = {seq: i for i, seq in enumerate(sorted(q.seq for queue in self.queues.values()
                                                      for q in queue))}
        return tuple((c.name, tuple((rank[q.seq], q.msg) for q in self.queues[c]))
                     for c in sorted(self.queues, key=lambda c: c.name) if self.queues[c])


class H2DChannels(ChannelQueues):
    """H2D request/response/data FIFOs with the GO-push ordering rule."""

    def __init__(self, go_push: bool = True):
        super().__init__(channels=(Channel.H2D_REQ, Channel.H2D_RSP, Channel.H2D_DATA))
        self.go_push: bool = go_push

    def earlier_go(self, snoop_seq: int, line: int) -> Optional[Message]:
        """A GO sent before `snoop_seq` for `line` that is still in flight."""
        for queued in self.queues[Channel.H2D_RSP]:
            if (queued.seq < snoop_seq and queued.msg.opcode in GO_OPCODES and
                    queued.msg.line == line):
                return queued.msg
        return None

    def blocked(self, channel: Channel) -> bool:
        if not self.go_push or channel is not Channel.H2D_REQ:
            return False
        head = self.queues[channel][0]
        return self.earlier_go(head.seq, head.msg.line) is not None

    def head_violates_go_push(self) -> Tuple[bool, Optional[Message]]:
        """Whether delivering the snoop head now would overtake an earlier GO."""
        queue = self.queues[Channel.H2D_REQ]
        if not queue:
            return False, None
        go = self.earlier_go(queue[0].seq, queue[0].msg.line)
        return go is not None, go


def deliver_h2d(channels: H2DChannels) -> List[Message]:
    """Drain in-flight H2D messages in an order honouring the GO-push rule.

    Responses are preferred over snoops whenever both are deliverable.
    """
    order = (Channel.H2D_RSP, Channel.H2D_DATA, Channel.H2D_REQ)
    delivered = []
    while channels:
        ready = channels.deliverable()
        channel = next(c for c in order if c in ready)
        delivered.append(channels.pop(channel))
    return delivered
