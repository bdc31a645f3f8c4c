"""CXLSim Device Cache Controller.

MESI cache over host memory.  One outstanding D2H request per line; line
state changes only when a GO completes a request or a snoop is applied.
Evictions move the line to I at issue time and keep the data in an eviction
buffer until the host pulls it.
"""


from dataclasses import dataclass, field
from enum import Enum
import logging
from sys import version_info
from typing import Callable, Dict, List, Optional, Set, Tuple   # Py3.9+: use generic types

from ..errors import AddressBusy, CoherenceError, IllegalStateForEvict, PermissionDenied
from ..protocol.address import Address, TAG_BITS, line_data, line_value
from ..protocol.channels import Channel
from ..protocol.fields import CacheState
from ..protocol.message import Message
from ..protocol.opcodes import (D2HCategory, D2HData, D2HReq, D2HRsp, H2DReq, H2DRsp,
                                d2h_category)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DEVICE_TAG_SPACE',
    'Awaiting',
    'DeviceCacheLine',
    'PendingRequest',
    'DeviceCache',
    'device_issue',
    'device_apply_snoop',
    'device_store',
)


logger = logging.getLogger(__name__)


# device request tags use the lower half of the tag space, host snoops the upper
DEVICE_TAG_SPACE: int = 1 << (TAG_BITS - 1)

_ZERO_LINE: bytes = line_data(0)

# legal line states for issuing each request
_ISSUE_STATES: Dict[D2HReq, Tuple[CacheState, ...]] = {
    D2HReq.RdCurr: (CacheState.I,),
    D2HReq.RdShared: (CacheState.I,),
    D2HReq.RdAny: (CacheState.I,),
    D2HReq.RdOwn: (CacheState.I, CacheState.S),
    D2HReq.RdOwnNoData: (CacheState.S,),
    D2HReq.CLFlush: (CacheState.I,),
    D2HReq.CacheFlushed: (CacheState.I,),
    D2HReq.ItoMWr: (CacheState.I,),
    D2HReq.WrCur: (CacheState.I,),
    D2HReq.WOWrInv: (CacheState.I,),
    D2HReq.WOWrInvF: (CacheState.I,),
    D2HReq.WrInv: (CacheState.I,),
    D2HReq.CleanEvict: (CacheState.E, CacheState.S),
    D2HReq.DirtyEvict: (CacheState.M,),
    D2HReq.CleanEvictNoData: (CacheState.E, CacheState.S),
}


class Awaiting(Enum):
    GO = 'GO'
    DATA = 'Data'
    WRITE_PULL = 'WritePull'
    GO_WRITE_PULL = 'GO_WritePull'


def _awaiting(opcode: D2HReq) -> Set[Awaiting]:
    category = d2h_category(opcode)
    if category is D2HCategory.READ:
        return {Awaiting.DATA} if opcode is D2HReq.RdCurr else {Awaiting.GO, Awaiting.DATA}
    if category is D2HCategory.READ0:
        return {Awaiting.GO}
    if category is D2HCategory.READ0_WRITE:
        return {Awaiting.WRITE_PULL, Awaiting.GO}
    return {Awaiting.GO} if opcode is D2HReq.CleanEvictNoData else {Awaiting.GO_WRITE_PULL}


@dataclass
class DeviceCacheLine:
    state: CacheState = CacheState.I
    data: bytes = _ZERO_LINE


@dataclass
class PendingRequest:   # pylint: disable=too-many-instance-attributes
    opcode: D2HReq
    address: Address
    tag: int
    awaiting: Set[Awaiting]
    granted: Optional[CacheState] = None
    data: Optional[bytes] = None
    write_data: Optional[bytes] = None      # Read0-Write payload / eviction buffer
    store_value: Optional[int] = None       # RdOwn issued with intent to write
    snooped: bool = False                   # eviction data superseded by a snoop
    error: bool = False
    deferred: List[Message] = field(default_factory=list)

    @property
    def category(self) -> D2HCategory:
        return d2h_category(self.opcode)


class DeviceCache:
    """Device cache controller (one CacheID below a host port)."""

    def __init__(self, cache_id: int = 0, name: Optional[str] = None,
                 permitted: Optional[Callable[[int], bool]] = None):
        self.cache_id: int = cache_id
        self.name: str = name or f'DEV{cache_id}'
        self.lines: Dict[int, DeviceCacheLine] = {}
        self.pending: Dict[int, PendingRequest] = {}
        self.permitted: Callable[[int], bool] = permitted or (lambda line: True)

        # (line, value) of completed reads, drained by monitors
        self.observed_reads: List[Tuple[int, int]] = []
        # (line, value) of stores, drained by monitors
        self.observed_writes: List[Tuple[int, int]] = []
        self.snapshots: List[Tuple[int, int]] = []

        self._next_tag: int = 0

    # STATE
    # =====
    def state(self, address: Address) -> CacheState:
        line = self.lines.get(address.line)
        return line.state if line else CacheState.I

    def _line(self, line: int) -> DeviceCacheLine:
        return self.lines.setdefault(line, DeviceCacheLine())

    def _set_state(self, line: int, state: CacheState, data: Optional[bytes] = None):
        entry = self._line(line)
        if entry.state is not state:
            logger.debug('%s %#x state %s->%s', self.name, line, entry.state.value, state.value)
        entry.state = state
        if data is not None:
            entry.data = data
        if state is CacheState.I:
            entry.data = _ZERO_LINE

    def _tag(self) -> int:
        tag = self._next_tag
        self._next_tag = (tag + 1) % DEVICE_TAG_SPACE
        return tag

    # ISSUE
    # =====
    def issue(self, opcode: D2HReq, address: Address, data: Optional[bytes] = None,
              store_value: Optional[int] = None) -> Message:
        """Start a D2H request; returns the D2H_REQ message to send."""
        line = address.line
        if line in self.pending:
            raise AddressBusy(f'{self.name} ALREADY HAS {self.pending[line].opcode.value} '
                              f'OUTSTANDING FOR {address}', address=address)

        if not self.permitted(line):
            raise PermissionDenied(f'{address} NOT PERMITTED TO USE CXL.cache AT {self.name}',
                                   address=address)

        state = self.state(address)
        if state not in _ISSUE_STATES[opcode]:
            raise IllegalStateForEvict(f'{opcode.value} ILLEGAL IN STATE {state.value} '
                                       f'AT {self.name} FOR {address}',
                                       opcode=opcode, state=state)

        pending = PendingRequest(opcode=opcode, address=address.line_address(),
                                 tag=self._tag(), awaiting=_awaiting(opcode),
                                 store_value=store_value)

        category = pending.category
        if category is D2HCategory.READ0_WRITE:
            pending.write_data = data if data is not None else _ZERO_LINE
        elif category is D2HCategory.WRITE:
            pending.write_data = self._line(line).data
            self._set_state(line, CacheState.I)

        self.pending[line] = pending
        return Message(opcode=opcode, address=pending.address, tag=pending.tag,
                       cache_id=self.cache_id)

    # HOST MESSAGES
    # =============
    def receive(self, msg: Message) -> List[Message]:
        """Apply one H2D message; returns D2H messages to send."""
        if msg.channel is Channel.H2D_REQ:
            return self.apply_snoop(msg)

        pending = self.pending.get(msg.line)
        assert pending is not None and pending.tag == msg.tag, \
            ValueError(f'*** {self.name}: UNEXPECTED {msg.describe()} ***')

        out: List[Message] = []

        if msg.channel is Channel.H2D_DATA:
            pending.data = msg.data
            pending.awaiting.discard(Awaiting.DATA)

        elif msg.opcode is H2DRsp.GO_Err:
            pending.error, pending.granted = True, CacheState.I
            pending.awaiting.clear()

        elif msg.opcode is H2DRsp.GO:
            pending.granted = msg.granted
            pending.awaiting.discard(Awaiting.GO)

        elif msg.opcode is H2DRsp.WritePull:
            out.append(self._data(pending.address, data=pending.write_data, tag=pending.tag))
            pending.awaiting.discard(Awaiting.WRITE_PULL)

        elif msg.opcode is H2DRsp.GO_WritePull:
            out.append(self._data(pending.address, data=pending.write_data, tag=pending.tag,
                                  bogus=pending.snooped))
            pending.granted = CacheState.I
            pending.awaiting.discard(Awaiting.GO_WRITE_PULL)

        if not pending.awaiting:
            out.extend(self._complete(pending))

        return out

    def _data(self, address: Address, data: bytes, tag: int, bogus: bool = False) -> Message:
        return Message(opcode=D2HData.Data, address=address, tag=tag,
                       cache_id=self.cache_id, data=data, bogus=bogus)

    def _complete(self, pending: PendingRequest) -> List[Message]:
        line = pending.address.line
        del self.pending[line]

        category = pending.category
        if pending.error:
            logger.info('%s %s %s completed with GO_Err', self.name, pending.opcode.value,
                        pending.address)
            self._set_state(line, CacheState.I)

        elif pending.opcode is D2HReq.RdCurr:
            # uncached snapshot: nothing installed, not subject to the data-value check
            self.snapshots.append((line, line_value(pending.data)))

        elif category is D2HCategory.READ:
            self._set_state(line, pending.granted, data=pending.data)
            self.observed_reads.append((line, line_value(pending.data)))
            if pending.store_value is not None and pending.granted.exclusive:
                self.store(pending.address, pending.store_value)

        elif pending.opcode is D2HReq.RdOwnNoData:
            self._set_state(line, pending.granted)

        else:
            self._set_state(line, CacheState.I)

        out: List[Message] = []
        for snoop in pending.deferred:
            out.extend(self.apply_snoop(snoop))
        return out

    # SNOOPS
    # ======
    def apply_snoop(self, snoop: Message) -> List[Message]:
        """Downgrade per snoop type; returns the response (+ data if the line was M)."""
        line = snoop.line
        pending = self.pending.get(line)

        # GO received but data still outstanding: the snoop waits for the data
        if (pending is not None and pending.granted is not None and
                Awaiting.DATA in pending.awaiting):
            pending.deferred.append(snoop)
            return []

        def rsp(opcode: D2HRsp) -> Message:
            return Message(opcode=opcode, address=snoop.address, tag=snoop.tag,
                           cache_id=self.cache_id)

        # eviction in flight: the buffered data answers the snoop
        if pending is not None and pending.category is D2HCategory.WRITE:
            pending.snooped = True
            if pending.opcode is D2HReq.DirtyEvict:
                return [rsp(D2HRsp.RspIFwdM),
                        self._data(snoop.address, data=pending.write_data, tag=snoop.tag)]
            return [rsp(D2HRsp.RspIHitSE)]

        entry = self._line(line)
        state = entry.state
        if state is CacheState.I:
            return [rsp(D2HRsp.RspIHitI)]

        # current M data travels with the response
        forward = [self._data(snoop.address, data=entry.data, tag=snoop.tag)] \
            if state is CacheState.M else []

        if snoop.opcode is H2DReq.SnpInv:
            self._set_state(line, CacheState.I)
            return [rsp(D2HRsp.RspIFwdM if forward else D2HRsp.RspIHitSE)] + forward

        if snoop.opcode is H2DReq.SnpData:
            self._set_state(line, CacheState.S)
            return [rsp(D2HRsp.RspSFwdM if forward else D2HRsp.RspSHitSE)] + forward

        # SnpCur: state retained
        return [rsp(D2HRsp.RspVFwdV if forward else D2HRsp.RspVHitV)] + forward

    # LOCAL ACCESS
    # ============
    def store(self, address: Address, value: int):
        """Write a full line on an owned (E/M) line; the line becomes M."""
        state = self.state(address)
        if not state.exclusive:
            raise CoherenceError(f'{self.name} CANNOT STORE TO {address} IN STATE {state.value}',
                                 address=address, state=state)
        self._set_state(address.line, CacheState.M, data=line_data(value))
        self.observed_writes.append((address.line, value))

    def snapshot(self) -> tuple:
        lines = tuple(sorted((line, e.state.value, line_value(e.data))
                             for line, e in self.lines.items() if e.state.valid))
        pending = tuple(sorted(
            (line, p.opcode.value, p.tag, tuple(sorted(a.value for a in p.awaiting)),
             p.granted.value if p.granted else None, p.snooped,
             None if p.data is None else line_value(p.data),
             len(p.deferred))
            for line, p in self.pending.items()))
        return lines, pending


def device_issue(dev: DeviceCache, opcode: D2HReq, address: Address, **kwargs) -> List[Message]:
    return [dev.issue(opcode=opcode, address=address, **kwargs)]


def device_apply_snoop(dev: DeviceCache, snoop: Message) -> List[Message]:
    return dev.apply_snoop(snoop)


def device_store(dev: DeviceCache, address: Address, value: int):
    dev.store(address=address, value=value)
