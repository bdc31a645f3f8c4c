"""CXLSim Host Home Agent (CXL.cache).

The home agent serializes transactions per line: while snoops for a line are
outstanding, later requests to it stall.  Peer caches are tracked in the snoop
filter by CacheID; the host CPU's own cache sits beside it and is updated
locally without messages.
"""


from collections import deque
from dataclasses import dataclass
import logging
from sys import version_info
from typing import Callable, Deque, Dict, List, Optional, Tuple   # Py3.9+: use generic types

from ..protocol.address import Address, TAG_BITS, line_data, line_value
from ..protocol.channels import Channel
from ..protocol.fields import CacheState
from ..protocol.message import Message
from ..protocol.opcodes import (D2HCategory, D2HReq, D2HRsp, H2DData, H2DReq, H2DRsp,
                                d2h_category)
from .device import DEVICE_TAG_SPACE, DeviceCacheLine
from .snoop_filter import HolderState, SnoopFilter

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'PermissionMap',
    'HomeAgent',
    'host_handle_d2h',
    'host_local_access',
)


logger = logging.getLogger(__name__)


_ZERO_LINE: bytes = line_data(0)

_FWD_RSPS = frozenset((D2HRsp.RspSFwdM, D2HRsp.RspIFwdM, D2HRsp.RspVFwdV))
_INVALIDATING_RSPS = frozenset((D2HRsp.RspIHitI, D2HRsp.RspIHitSE, D2HRsp.RspIFwdM))
_SHARED_RSPS = frozenset((D2HRsp.RspSHitSE, D2HRsp.RspSFwdM))


class PermissionMap:
    """Which lines each CacheID may access through CXL.cache (default: all)."""

    def __init__(self, denied: Optional[Dict[int, Sequence[Tuple[int, int]]]] = None):
        # cache_id -> [(base, size)] HPA ranges limited to CXL.io
        self.denied: Dict[int, List[Tuple[int, int]]] = \
            {k: list(v) for k, v in (denied or {}).items()}

    def deny(self, cache_id: int, base: int, size: int):
        self.denied.setdefault(cache_id, []).append((base, size))

    def permitted(self, cache_id: int, line: int) -> bool:
        return not any(base <= line < base + size for base, size in self.denied.get(cache_id, ()))

    def for_device(self, cache_id: int) -> Callable[[int], bool]:
        return lambda line: self.permitted(cache_id, line)


@dataclass
class _Txn:   # pylint: disable=too-many-instance-attributes
    kind: str                         # 'request' | 'host' | 'victim'
    line: int
    requester: Optional[int] = None   # CacheID of a device request
    opcode: Optional[D2HReq] = None
    tag: int = 0
    exclusive: bool = False           # host access
    store_value: Optional[int] = None
    snoops: int = 0

    @property
    def address(self) -> Address:
        return Address(hpa=self.line)


@dataclass
class _SnoopCtx:
    txn: _Txn
    rsp: Optional[D2HRsp] = None
    got_data: bool = False

    @property
    def done(self) -> bool:
        return self.rsp is not None and (self.rsp not in _FWD_RSPS or self.got_data)


class HomeAgent:   # pylint: disable=too-many-instance-attributes
    """Host home agent with an exact snoop filter."""

    def __init__(self, name: str = 'HOST', sf_capacity: int = 4096,
                 permissions: Optional[PermissionMap] = None):
        self.name: str = name
        self.sf: SnoopFilter = SnoopFilter(capacity=sf_capacity)
        self.permissions: PermissionMap = permissions or PermissionMap()

        self.memory: Dict[int, bytes] = {}
        self.cpu: Dict[int, DeviceCacheLine] = {}

        self.busy: Dict[int, _Txn] = {}
        self.waiting: Dict[int, Deque[_Txn]] = {}
        self.stalled: List[_Txn] = []

        self._snoops: Dict[Tuple[int, int], _SnoopCtx] = {}
        self._pulls: Dict[Tuple[int, int], _Txn] = {}
        self._next_tag: int = 0

        self.observed_reads: List[Tuple[int, int]] = []
        self.observed_writes: List[Tuple[int, int]] = []

    # HELPERS
    # =======
    def read_memory(self, line: int) -> bytes:
        return self.memory.get(line, _ZERO_LINE)

    def cpu_state(self, line: int) -> CacheState:
        entry = self.cpu.get(line)
        return entry.state if entry else CacheState.I

    def _snoop_tag(self) -> int:
        tag = DEVICE_TAG_SPACE + self._next_tag
        self._next_tag = (self._next_tag + 1) % ((1 << TAG_BITS) - DEVICE_TAG_SPACE)
        return tag

    def _cpu_writeback(self, line: int, keep: Optional[CacheState]):
        """Write back host CPU M data; keep the line in `keep` state (None: invalidate)."""
        entry = self.cpu.get(line)
        if entry is None or not entry.state.valid:
            return
        if entry.state is CacheState.M:
            self.memory[line] = entry.data
        if keep is None:
            del self.cpu[line]
        elif keep is not entry.state:
            entry.state = keep

    @staticmethod
    def _go(txn: _Txn, granted: CacheState, opcode: H2DRsp = H2DRsp.GO) -> Message:
        return Message(opcode=opcode, address=txn.address, tag=txn.tag,
                       cache_id=txn.requester, granted=granted)

    def _data(self, txn: _Txn) -> Message:
        return Message(opcode=H2DData.Data, address=txn.address, tag=txn.tag,
                       cache_id=txn.requester, data=self.read_memory(txn.line))

    # ENTRY POINTS
    # ============
    def receive(self, msg: Message) -> List[Message]:
        """Handle one D2H message; returns H2D messages (snoops, GOs, data) to send."""
        if msg.channel is Channel.D2H_REQ:
            return self._admit(_Txn(kind='request', line=msg.line, requester=msg.cache_id,
                                    opcode=msg.opcode, tag=msg.tag))

        if msg.channel is Channel.D2H_RSP:
            ctx = self._snoops[(msg.cache_id, msg.tag)]
            ctx.rsp = msg.opcode
            if msg.opcode in _INVALIDATING_RSPS:
                self.sf.remove(msg.line, msg.cache_id)
            elif msg.opcode in _SHARED_RSPS:
                self.sf.downgrade(msg.line, msg.cache_id)
            return self._snoop_progress(msg.cache_id, msg.tag)

        assert msg.channel is Channel.D2H_DATA, ValueError(f'*** {msg.describe()} ***')
        key = (msg.cache_id, msg.tag)

        if key in self._snoops:
            self.memory[msg.line] = msg.data
            self._snoops[key].got_data = True
            return self._snoop_progress(*key)

        txn = self._pulls.pop(key)
        if msg.bogus:
            logger.debug('%s dropped bogus data for %s from cache %d',
                         self.name, msg.address, msg.cache_id)
        elif txn.opcode is not D2HReq.CleanEvict:
            self.memory[txn.line] = msg.data

        out: List[Message] = []
        if d2h_category(txn.opcode) is D2HCategory.READ0_WRITE:
            out.append(self._go(txn, CacheState.I))
        return out + self._release(txn.line)

    def local_access(self, address: Address, exclusive: bool,
                     store_value: Optional[int] = None) -> List[Message]:
        """Host CPU access; exclusive access takes ownership (and stores `store_value`)."""
        return self._admit(_Txn(kind='host', line=address.line, exclusive=exclusive,
                                store_value=store_value))

    # TRANSACTIONS
    # ============
    def _admit(self, txn: _Txn) -> List[Message]:
        if txn.line in self.busy:
            self.waiting.setdefault(txn.line, deque()).append(txn)
            return []
        self.busy[txn.line] = txn
        return self._proceed(txn)

    def _needs_entry(self, txn: _Txn) -> bool:
        return (txn.kind == 'request' and
                d2h_category(txn.opcode) is D2HCategory.READ and
                txn.opcode is not D2HReq.RdCurr and
                txn.line not in self.sf)

    def _proceed(self, txn: _Txn) -> List[Message]:
        if txn.kind == 'request' and not self.permissions.permitted(txn.requester, txn.line):
            logger.info('%s: %s %s from cache %d not permitted',
                        self.name, txn.opcode.value, txn.address, txn.requester)
            return [self._go(txn, CacheState.I, opcode=H2DRsp.GO_Err)] + self._release(txn.line)

        out: List[Message] = []
        if self._needs_entry(txn) and self.sf.full:
            self.stalled.append(txn)
            return self._start_victim()

        targets = self._snoop_targets(txn)
        for cache_id, opcode in targets.items():
            tag = self._snoop_tag()
            self._snoops[(cache_id, tag)] = _SnoopCtx(txn=txn)
            out.append(Message(opcode=opcode, address=txn.address, tag=tag, cache_id=cache_id))
        txn.snoops = len(targets)

        if not targets:
            out.extend(self._grant(txn))
        return out

    def _start_victim(self) -> List[Message]:
        if any(t.kind == 'victim' for t in self.busy.values()):
            return []

        victim = self.sf.victim(exclude=tuple(self.busy))
        if victim is None:
            return []

        logger.debug('%s: snoop filter full, back-invalidating %#x', self.name, victim)
        txn = _Txn(kind='victim', line=victim)
        self.busy[victim] = txn
        return self._proceed(txn)

    def _snoop_targets(self, txn: _Txn) -> Dict[int, H2DReq]:
        holders = {c: s for c, s in self.sf.holders(txn.line).items() if c != txn.requester}
        owner = [c for c, s in holders.items() if s is HolderState.EM]

        if txn.kind == 'victim' or (txn.kind == 'host' and txn.exclusive):
            return {c: H2DReq.SnpInv for c in holders}
        if txn.kind == 'host':
            return {c: H2DReq.SnpData for c in owner}

        opcode = txn.opcode
        category = d2h_category(opcode)
        if opcode is D2HReq.RdCurr:
            return {c: H2DReq.SnpCur for c in owner}
        if opcode in (D2HReq.RdShared, D2HReq.RdAny):
            return {c: H2DReq.SnpData for c in owner}
        if opcode is D2HReq.RdOwnNoData and txn.requester not in self.sf.holders(txn.line):
            return {}
        if category in (D2HCategory.READ, D2HCategory.READ0, D2HCategory.READ0_WRITE) and \
                opcode is not D2HReq.CacheFlushed:
            return {c: H2DReq.SnpInv for c in holders}
        return {}

    def _snoop_progress(self, cache_id: int, tag: int) -> List[Message]:
        ctx = self._snoops[(cache_id, tag)]
        if not ctx.done:
            return []
        del self._snoops[(cache_id, tag)]
        ctx.txn.snoops -= 1
        return self._grant(ctx.txn) if ctx.txn.snoops == 0 else []

    def _grant(self, txn: _Txn) -> List[Message]:   # pylint: disable=too-many-branches,too-many-return-statements
        line = txn.line

        if txn.kind == 'victim':
            return self._release(line)

        if txn.kind == 'host':
            if txn.exclusive:
                self._cpu_writeback(line, keep=None)
                entry = self.cpu[line] = DeviceCacheLine(state=CacheState.E,
                                                         data=self.read_memory(line))
                if txn.store_value is not None:
                    entry.state, entry.data = CacheState.M, line_data(txn.store_value)
                    self.observed_writes.append((line, txn.store_value))
            elif not self.cpu_state(line).valid:
                self.cpu[line] = DeviceCacheLine(state=CacheState.S, data=self.read_memory(line))
            if txn.store_value is None:
                self.observed_reads.append((line, line_value(self.cpu[line].data)))
            return self._release(line)

        opcode, category = txn.opcode, d2h_category(txn.opcode)

        if opcode is D2HReq.RdCurr:
            self._cpu_writeback(line, keep=self.cpu_state(line))
            return [self._data(txn)] + self._release(line)

        if category is D2HCategory.READ:
            if opcode is D2HReq.RdOwn:
                self._cpu_writeback(line, keep=None)
                granted = CacheState.E
            else:
                others = [c for c in self.sf.holders(line) if c != txn.requester]
                granted = (CacheState.E if opcode is D2HReq.RdAny and not others and
                           not self.cpu_state(line).valid else CacheState.S)
                if self.cpu_state(line).valid:
                    self._cpu_writeback(line, keep=CacheState.S)
            self.sf.grant(line, txn.requester, granted)
            return [self._go(txn, granted), self._data(txn)] + self._release(line)

        if opcode is D2HReq.RdOwnNoData:
            if txn.requester in self.sf.holders(line):
                self._cpu_writeback(line, keep=None)
                self.sf.grant(line, txn.requester, CacheState.E)
                return [self._go(txn, CacheState.E)] + self._release(line)
            return [self._go(txn, CacheState.I)] + self._release(line)

        if opcode is D2HReq.CacheFlushed:
            for entry in list(self.sf):
                self.sf.remove(entry.line, txn.requester)
            return [self._go(txn, CacheState.I)] + self._release(line)

        if category is D2HCategory.READ0:   # CLFlush
            self._cpu_writeback(line, keep=None)
            return [self._go(txn, CacheState.I)] + self._release(line)

        if category is D2HCategory.READ0_WRITE:
            self._cpu_writeback(line, keep=None)
            self._pulls[(txn.requester, txn.tag)] = txn
            return [self._go(txn, CacheState.I, opcode=H2DRsp.WritePull)]

        # evictions
        self.sf.remove(line, txn.requester)
        if opcode is D2HReq.CleanEvictNoData:
            return [self._go(txn, CacheState.I)] + self._release(line)
        self._pulls[(txn.requester, txn.tag)] = txn
        return [self._go(txn, CacheState.I, opcode=H2DRsp.GO_WritePull)]

    def _release(self, line: int) -> List[Message]:
        del self.busy[line]
        out: List[Message] = []

        queue = self.waiting.get(line)
        if queue:
            txn = queue.popleft()
            if not queue:
                del self.waiting[line]
            out.extend(self._admit(txn))

        for txn in list(self.stalled):
            if txn not in self.stalled:
                continue
            if txn.line in self.sf or not self.sf.full:
                self.stalled.remove(txn)
                out.extend(self._proceed(txn))
        if self.stalled:
            out.extend(self._start_victim())
        return out

    @property
    def idle(self) -> bool:
        return not (self.busy or self.waiting or self.stalled)

    def snapshot(self) -> tuple:
        return (self.sf.snapshot(),
                tuple(sorted((line, line_value(d)) for line, d in self.memory.items())),
                tuple(sorted((line, e.state.value, line_value(e.data))
                             for line, e in self.cpu.items())),
                tuple(sorted((line, t.kind, t.requester, t.snoops)
                             for line, t in self.busy.items())),
                tuple(sorted((line, tuple((t.kind, t.requester, t.opcode and t.opcode.value)
                                          for t in q))
                             for line, q in self.waiting.items())))


def host_handle_d2h(host: HomeAgent, req: Message) -> List[Message]:
    return host.receive(req)


def host_local_access(host: HomeAgent, address: Address, exclusive: bool,
                      store_value: Optional[int] = None) -> List[Message]:
    return host.local_access(address=address, exclusive=exclusive, store_value=store_value)
