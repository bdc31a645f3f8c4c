"""CXLSim Host CXL.mem Master.

A host caching lines of device memory.  Each host is its own coherence
domain; lines of HDM-DB memory it caches are tracked by the device directory
and taken back with Back-Invalidate snoops.
"""


from dataclasses import dataclass, field
from enum import Enum
import logging
from sys import version_info
from typing import Callable, Dict, List, Optional, Set   # Py3.9+: use generic types

from ..cache.device import DeviceCacheLine
from ..errors import AddressBusy, CoherenceError
from ..protocol.address import Address, line_data, line_value
from ..protocol.channels import Channel
from ..protocol.fields import CacheState, DevLoad, MetaField
from ..protocol.message import Message
from ..protocol.opcodes import (D2HReq, M2SBIRsp, M2SReq, M2SRwD, S2MBISnp, S2MNDR)
from .device import META_ANY, META_INVALID, META_SHARED

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'HostMemAgent',


logger = logging.getLogger(__name__)


class _Wait(Enum):
    DATA = 'Data'
    CMP = 'Cmp'


_CMP_STATE: Dict[S2MNDR, CacheState] = {
    S2MNDR.Cmp_E: CacheState.E,
    S2MNDR.Cmp_S: CacheState.S,
    S2MNDR.Cmp: CacheState.I,
}


@dataclass
class _Pending:
    opcode: M2SReq
    tag: int
    awaiting: Set[_Wait]
    wanted: CacheState
    state: Optional[CacheState] = None
    data: Optional[bytes] = None
    meta: Optional[int] = None


@dataclass
class _Stats:
    completed: int = 0
    poisoned: int = 0
    devload: List[DevLoad] = field(default_factory=list)


class HostMemAgent:   # pylint: disable=too-many-instance-attributes
    """CXL.mem master of one host (PID `host_id`)."""

    def __init__(self, host_id: int = 0, name: Optional[str] = None,
                 needs_cmp: Optional[Callable[[int], bool]] = None):
        self.host_id: int = host_id
        self.name: str = name or f'H{host_id}'
        # whether reads of a line complete with an NDR besides the data
        self.needs_cmp: Callable[[int], bool] = needs_cmp or (lambda line: True)

        self.cache: Dict[int, DeviceCacheLine] = {}
        self.pending: Dict[int, _Pending] = {}
        self.acks: Set[int] = set()
        self.stats: _Stats = _Stats()
        self.last_meta: Dict[int, Optional[int]] = {}

        self._next_tag: int = 0

    def state(self, address: Address) -> CacheState:
        entry = self.cache.get(address.line)
        return entry.state if entry else CacheState.I

    def _tag(self) -> int:
        self._next_tag = (self._next_tag + 1) % (1 << 16)
        return self._next_tag

    def _check_free(self, address: Address):
        if address.line in self.pending:
            raise AddressBusy(f'{self.name} ALREADY HAS {self.pending[address.line].opcode.value} '
                              f'OUTSTANDING FOR {address}', address=address)

    # REQUESTS
    # ========
    def read(self, address: Address, exclusive: bool = False, cache: bool = True,
             meta: Optional[int] = None) -> Message:
        """MemRd asking for S (or E with `exclusive`); `meta` overrides the meta directive."""
        self._check_free(address)
        if self.state(address).valid:
            raise CoherenceError(f'{self.name} ALREADY CACHES {address}', address=address)

        if meta is None:
            meta = (META_ANY if exclusive else META_SHARED) if cache else META_INVALID
        wanted = CacheState.I if not cache else CacheState.E if exclusive else CacheState.S

        tag = self._tag()
        awaiting = {_Wait.DATA, _Wait.CMP} if self.needs_cmp(address.line) else {_Wait.DATA}
        self.pending[address.line] = _Pending(opcode=M2SReq.MemRd, tag=tag, awaiting=awaiting,
                                              wanted=wanted)
        return Message(opcode=M2SReq.MemRd, address=address.line_address(), tag=tag,
                       spid=self.host_id, meta_field=MetaField.META0_STATE, meta=meta)

    def write(self, address: Address, value: int, poison: bool = False,
              byte_enable: Optional[int] = None) -> Message:
        """Uncached (write-through) MemWr / MemWrPtl."""
        self._check_free(address)
        tag = self._tag()
        self.acks.add(tag)
        return Message(opcode=M2SRwD.MemWr if byte_enable is None else M2SRwD.MemWrPtl,
                       address=address.line_address(), tag=tag, spid=self.host_id,
                       data=line_data(value), poison=poison, byte_enable=byte_enable)

    def store(self, address: Address, value: int):
        entry = self.cache.get(address.line)
        if entry is None or not entry.state.exclusive:
            raise CoherenceError(f'{self.name} CANNOT STORE TO {address} IN STATE '
                                 f'{self.state(address).value}', address=address)
        entry.state, entry.data = CacheState.M, line_data(value)

    def evict(self, address: Address) -> Message:
        """Dirty lines are written back, clean ones announced with MemClnEvct."""
        self._check_free(address)
        entry = self.cache.pop(address.line, None)
        assert entry is not None and entry.state.valid, \
            ValueError(f'*** {self.name} DOES NOT CACHE {address} ***')

        tag = self._tag()
        self.pending[address.line] = _Pending(opcode=M2SReq.MemClnEvct, tag=tag,
                                              awaiting={_Wait.CMP}, wanted=CacheState.I)
        if entry.state is CacheState.M:
            return Message(opcode=M2SRwD.MemWr, address=address.line_address(), tag=tag,
                           spid=self.host_id, data=entry.data,
                           meta_field=MetaField.META0_STATE, meta=META_INVALID)
        return Message(opcode=M2SReq.MemClnEvct, address=address.line_address(), tag=tag,
                       spid=self.host_id, meta_field=MetaField.META0_STATE, meta=META_INVALID)

    # RESPONSES
    # =========
    def receive(self, msg: Message) -> List[Message]:
        """Handle one device message; returns M2S messages to send."""
        if msg.devload is not None:
            self.stats.devload.append(msg.devload)

        if msg.channel is Channel.S2M_BISNP:
            return self._back_invalidate(msg)
        if msg.channel is Channel.D2H_REQ:
            return self._bias_flip(msg)

        if msg.channel is Channel.S2M_NDR and msg.tag in self.acks:
            self.acks.discard(msg.tag)
            return []

        pending = self.pending.get(msg.line)
        assert pending is not None and pending.tag == msg.tag, \
            ValueError(f'*** {self.name}: UNEXPECTED {msg.describe()} ***')

        if msg.channel is Channel.S2M_DRS:
            pending.data, pending.meta = msg.data, msg.meta
            self.stats.poisoned += msg.poison
            pending.awaiting.discard(_Wait.DATA)
        else:
            pending.state = _CMP_STATE.get(msg.opcode, CacheState.I)
            pending.awaiting.discard(_Wait.CMP)

        if not pending.awaiting:
            self._complete(msg.line, pending)
        return []

    def _complete(self, line: int, pending: _Pending):
        del self.pending[line]
        self.stats.completed += 1
        if pending.opcode is M2SReq.MemClnEvct:
            return

        self.last_meta[line] = pending.meta
        state = pending.wanted if pending.state is None else pending.state
        if state.valid:
            self.cache[line] = DeviceCacheLine(state=state, data=pending.data)
        logger.debug('%s %#x -> %s', self.name, line, state.value)

    def _writeback(self, msg: Message, entry: DeviceCacheLine) -> List[Message]:
        if entry.state is not CacheState.M:
            return []
        tag = self._tag()
        self.acks.add(tag)
        return [Message(opcode=M2SRwD.MemWr, address=msg.address, tag=tag, spid=self.host_id,
                        data=entry.data)]

    def _back_invalidate(self, snoop: Message) -> List[Message]:
        entry = self.cache.get(snoop.line)

        def rsp(opcode: M2SBIRsp) -> Message:
            return Message(opcode=opcode, address=snoop.address, tag=snoop.tag,
                           spid=self.host_id)

        if entry is None or not entry.state.valid:
            return [rsp(M2SBIRsp.BIRspI)]

        out = self._writeback(snoop, entry)
        if snoop.opcode is S2MBISnp.BISnpInv:
            del self.cache[snoop.line]
            return out + [rsp(M2SBIRsp.BIRspI)]
        if snoop.opcode is S2MBISnp.BISnpData:
            entry.state = CacheState.S
            return out + [rsp(M2SBIRsp.BIRspS)]

        # BISnpCur: state kept, dirty data now clean in memory
        if entry.state is CacheState.M:
            entry.state = CacheState.E
        return out + [rsp(M2SBIRsp.BIRspE if entry.state.exclusive else M2SBIRsp.BIRspS)]

    def _bias_flip(self, req: Message) -> List[Message]:
        """RdOwnNoData from a Type-2 device for its own HDM-D line: drop every host copy."""
        assert req.opcode is D2HReq.RdOwnNoData, \
            ValueError(f'*** {self.name}: UNEXPECTED {req.describe()} ***')
        out: List[Message] = []
        entry = self.cache.pop(req.line, None)
        if entry is not None:
            out.extend(self._writeback(req, entry))
        out.append(Message(opcode=M2SReq.MemRdFwd, address=req.address, tag=req.tag,
                           spid=self.host_id))
        return out

    @property
    def idle(self) -> bool:
        return not self.pending and not self.acks

    def snapshot(self) -> tuple:
        return (tuple(sorted((line, e.state.value, line_value(e.data))
                             for line, e in self.cache.items())),
                tuple(sorted((line, p.opcode.value, tuple(sorted(w.value for w in p.awaiting)))
                             for line, p in self.pending.items())))
