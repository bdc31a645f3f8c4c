"""CXLSim CXL.mem Device.

Subordinate agent behind one or more HDM regions.  HDM-H lines keep a 2-bit
meta value; HDM-D lines are tracked by the device coherence agent (DCOH)
through a bias table and the device's own cache; HDM-DB lines are tracked in
the sharing directory and reclaimed from hosts with Back-Invalidate snoops.
"""


from collections import deque
from dataclasses import dataclass, field
from enum import Enum
import logging
from sys import version_info
from typing import Deque, Dict, List, Optional, Set   # Py3.9+: use generic types

from ..cache.device import DeviceCacheLine
from ..errors import OutOfRange
from ..protocol.address import Address, LINE_BYTES, line_data
from ..protocol.channels import Channel
from ..protocol.fields import CacheState, DevLoad, MetaField
from ..protocol.message import Message
from ..protocol.opcodes import (D2HReq, M2SBIRsp, M2SReq, M2SRwD, S2MBISnp, S2MDRS, S2MNDR)
from .directory import Directory, DirState
from .region import HdmKind, HdmRegion, check_disjoint

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'META_INVALID', 'META_ANY', 'META_SHARED',
    'Bias',
    'MemLine',
    'MemDevice',
    'mem_read',
    'mem_write',
    'bi_snoop',
    'snoop_filter_eviction',
)


logger = logging.getLogger(__name__)


# Meta0-State encodings of the host's intended cache state
META_INVALID: int = 0
META_ANY: int = 2
META_SHARED: int = 3

_ZERO_LINE: bytes = line_data(0)

_READS = frozenset((M2SReq.MemRd, M2SReq.MemRdData))
_BI_OPCODE: Dict[DirState, S2MBISnp] = {
    DirState.E: S2MBISnp.BISnpInv,
    DirState.S: S2MBISnp.BISnpData,
    DirState.I: S2MBISnp.BISnpCur,
}


class Bias(Enum):
    HOST_S = 'Host-S'
    HOST_A = 'Host-A'
    DEVICE = 'Device'


@dataclass
class MemLine:
    data: bytes = _ZERO_LINE
    meta: int = 0
    poison: bool = False


@dataclass
class _BiTxn:
    """A host request (or a victim eviction) waiting for BIRsps."""

    line: int
    request: Optional[Message]
    needed: DirState
    waiting: Set[int] = field(default_factory=set)
    responses: Dict[int, M2SBIRsp] = field(default_factory=dict)


def _merge(old: bytes, new: bytes, byte_enable: int) -> bytes:
    return bytes(new[i] if byte_enable >> i & 1 else old[i] for i in range(LINE_BYTES))


class MemDevice:   # pylint: disable=too-many-instance-attributes
    """Type-2 or Type-3 CXL.mem device."""

    def __init__(self, name: str = 'D0', regions: Sequence[HdmRegion] = (),
                 device_type: int = 3, directory: Optional[Directory] = None,
                 media_latency_ns: int = 80):
        check_disjoint(regions)
        for region in regions:
            assert region.kind is not HdmKind.HDM_D or device_type == 2, \
                ValueError(f'*** {region}: HDM-D ONLY ON TYPE-2 DEVICES ***')
        assert device_type in (2, 3), ValueError(f'*** DEVICE TYPE {device_type} ***')
        assert directory is not None or all(r.kind is not HdmKind.HDM_DB for r in regions), \
            ValueError('*** HDM-DB REGIONS NEED A DIRECTORY ***')

        self.name: str = name
        self.regions: List[HdmRegion] = list(regions)
        self.device_type: int = device_type
        self.directory: Optional[Directory] = directory
        self.media_latency_ns: int = media_latency_ns

        self.media: Dict[int, MemLine] = {}
        self.bias: Dict[int, Bias] = {}
        self.cache: Dict[int, DeviceCacheLine] = {}   # HDM-D device-side cache
        self.devload: Optional[DevLoad] = None

        self.bi_pending: Dict[int, _BiTxn] = {}
        self.waiting: Dict[int, Deque[Message]] = {}
        self.spec_reads: int = 0
        self.reads: int = 0
        self.writes: int = 0
        self._next_tag: int = 0

    # LOOKUPS
    # =======
    def region_of(self, address: Address) -> HdmRegion:
        for region in self.regions:
            if region.contains(address):
                return region
        raise OutOfRange(f'{address.hpa:#x} OUTSIDE EVERY HDM REGION OF {self.name}',
                         address=address, device=self.name)

    def line(self, address: Address) -> MemLine:
        return self.media.setdefault(address.line, MemLine())

    def bias_of(self, address: Address) -> Bias:
        return self.bias.get(address.line, Bias.HOST_A)

    def _tag(self) -> int:
        self._next_tag = (self._next_tag + 1) % (1 << 16)
        return self._next_tag

    # RESPONSES
    # =========
    def _ndr(self, req: Message, opcode: S2MNDR = S2MNDR.Cmp) -> Message:
        return Message(opcode=opcode, address=req.address, tag=req.tag, ld_id=req.ld_id,
                       dpid=req.spid, devload=self.devload)

    def _drs(self, req: Message, entry: MemLine, meta: Optional[int] = None) -> Message:
        return Message(opcode=S2MDRS.MemData, address=req.address, tag=req.tag,
                       ld_id=req.ld_id, dpid=req.spid, data=entry.data,
                       meta=meta, poison=entry.poison, devload=self.devload)

    # ENTRY POINT
    # ===========
    def receive(self, msg: Message) -> List[Message]:
        """Handle one M2S message; returns S2M messages (responses and BISnps)."""
        if msg.channel is Channel.M2S_BIRSP:
            return self._bi_response(msg)

        if msg.channel is Channel.M2S_RWD:
            return self._write(msg)

        if msg.opcode in _READS or msg.opcode in (M2SReq.MemInv, M2SReq.MemClnEvct):
            if msg.line in self.bi_pending or msg.line in self.waiting:
                self.waiting.setdefault(msg.line, deque()).append(msg)
                return []
        return self._request(msg)

    def _request(self, msg: Message) -> List[Message]:   # pylint: disable=too-many-return-statements
        if msg.opcode is M2SReq.MemSpecRd:
            self.spec_reads += 1
            return []

        if msg.opcode in (M2SReq.MemRdFwd, M2SReq.MemWrFwd):
            return self._bias_flip_done(msg)

        try:
            region = self.region_of(msg.address)
        except OutOfRange as err:
            logger.info('%s: %s', self.name, err)
            if msg.opcode in _READS:
                return [Message(opcode=S2MDRS.MemData, address=msg.address, tag=msg.tag,
                                ld_id=msg.ld_id, dpid=msg.spid, data=_ZERO_LINE,
                                poison=True, devload=self.devload)]
            raise

        if region.kind is HdmKind.HDM_DB:
            return self._db_request(msg)
        if region.kind is HdmKind.HDM_D:
            return self._d_request(msg)
        return self._h_request(msg)

    # HDM-H
    # =====
    def _h_request(self, msg: Message) -> List[Message]:
        entry = self.line(msg.address)
        prior = entry.meta
        if msg.meta_field is MetaField.META0_STATE and msg.meta is not None:
            entry.meta = msg.meta

        if msg.opcode in _READS:
            self.reads += 1
            out = [self._drs(msg, entry, meta=prior)]
            if self.device_type == 2:
                out.append(self._ndr(msg))
            return out

        # MemInv: meta-only update; MemClnEvct: nothing tracked
        return [self._ndr(msg)]

    # HDM-D
    # =====
    def _d_request(self, msg: Message) -> List[Message]:
        line = msg.line
        entry = self.line(msg.address)
        cached = self.cache.get(line)

        wants = msg.meta if msg.meta_field is MetaField.META0_STATE else None

        # DCOH: the device cache may hold a newer copy
        if cached is not None and cached.state.valid and msg.opcode is not M2SReq.MemClnEvct:
            if cached.state is CacheState.M:
                entry.data = cached.data
            if wants == META_SHARED and msg.opcode in _READS:
                cached.state = CacheState.S
            else:
                del self.cache[line]

        if wants == META_SHARED:
            self.bias[line] = Bias.HOST_S
        elif wants == META_ANY:
            self.bias[line] = Bias.HOST_A

        cmp = {META_SHARED: S2MNDR.Cmp_S, META_ANY: S2MNDR.Cmp_E}.get(wants, S2MNDR.Cmp)
        if msg.opcode in _READS:
            self.reads += 1
            return [self._drs(msg, entry, meta=wants), self._ndr(msg, cmp)]
        return [self._ndr(msg, cmp)]

    def start_bias_flip(self, address: Address) -> List[Message]:
        """Ask the host to give up its copies (D2H RdOwnNoData); no-op in device bias."""
        assert self.region_of(address).kind is HdmKind.HDM_D, \
            ValueError(f'*** {address} IS NOT HDM-D ***')
        if self.bias_of(address) is Bias.DEVICE:
            return []
        return [Message(opcode=D2HReq.RdOwnNoData, address=address.line_address(),
                        tag=self._tag(), cache_id=0)]

    def _bias_flip_done(self, msg: Message) -> List[Message]:
        line = msg.line
        self.bias[line] = Bias.DEVICE
        self.cache[line] = DeviceCacheLine(state=CacheState.E, data=self.line(msg.address).data)
        logger.debug('%s %#x bias -> Device', self.name, line)
        return []

    def device_store(self, address: Address, value: int):
        """Device-side write to an HDM-D line it owns in device bias."""
        cached = self.cache.get(address.line)
        assert cached is not None and cached.state.exclusive, \
            ValueError(f'*** {self.name} DOES NOT OWN {address} ***')
        cached.state, cached.data = CacheState.M, line_data(value)

    # HDM-DB
    # ======
    @staticmethod
    def _needed(msg: Message) -> DirState:
        if msg.opcode is M2SReq.MemInv or (msg.meta_field is MetaField.META0_STATE and
                                           msg.meta == META_ANY):
            return DirState.E
        if msg.meta_field is MetaField.META0_STATE and msg.meta == META_SHARED:
            return DirState.S
        return DirState.I

    def _db_request(self, msg: Message) -> List[Message]:
        host = msg.spid or 0
        line = msg.line

        if msg.opcode is M2SReq.MemClnEvct:
            self.directory.remove(line, host)
            return [self._ndr(msg)]

        needed = self._needed(msg)

        if needed is not DirState.I and line not in self.directory and self.directory.full:
            self.waiting.setdefault(line, deque()).appendleft(msg)
            if any(t.request is None for t in self.bi_pending.values()):
                return []
            victim = self.directory.victim(exclude=tuple(self.bi_pending) + (line,))
            # every entry mid Back-Invalidate: retried when one completes
            return [] if victim is None else snoop_filter_eviction(self, victim)

        targets = self.directory.snoop_targets(line, requester=host,
                                               exclusive=needed is DirState.E)
        if targets:
            return bi_snoop(self, msg.address, needed, targets=targets, request=msg)
        return self._db_grant(msg, needed)

    def _db_grant(self, msg: Message, needed: DirState) -> List[Message]:
        host = msg.spid or 0
        line = msg.line
        if needed is DirState.E:
            self.directory.set_exclusive(line, host)
        elif needed is DirState.S:
            self.directory.add_sharer(line, host)

        cmp = {DirState.E: S2MNDR.Cmp_E, DirState.S: S2MNDR.Cmp_S}.get(needed, S2MNDR.Cmp)
        if msg.opcode in _READS:
            self.reads += 1
            return [self._drs(msg, self.line(msg.address)), self._ndr(msg, cmp)]
        return [self._ndr(msg, cmp)]

    def _bi_response(self, msg: Message) -> List[Message]:
        host = msg.spid or 0
        line = msg.line
        txn = self.bi_pending[line]

        txn.responses[host] = msg.opcode
        txn.waiting.discard(host)
        if txn.waiting:
            return []

        # the directory changes only once every host has answered
        del self.bi_pending[line]
        for host, rsp in sorted(txn.responses.items()):
            if rsp is M2SBIRsp.BIRspI:
                self.directory.remove(line, host)
            elif rsp is M2SBIRsp.BIRspS:
                self.directory.downgrade(line, host)
        if txn.request is None:
            # victim fully back-invalidated
            self.directory.invalidate(line)
            out: List[Message] = []
        else:
            out = self._db_grant(txn.request, txn.needed)
        return out + self._resume(line) + self._resume_blocked()

    def _resume(self, line: int) -> List[Message]:
        out: List[Message] = []
        queue = self.waiting.get(line)
        while queue and line not in self.bi_pending:
            msg = queue.popleft()
            out.extend(self._request(msg))
            if queue and queue[0] is msg:
                # still no directory entry
                break
        if queue is not None and not queue:
            del self.waiting[line]
        return out

    def _resume_blocked(self) -> List[Message]:
        """Retry requests that waited for a directory entry."""
        out: List[Message] = []
        for line in list(self.waiting):
            if line not in self.bi_pending:
                out.extend(self._resume(line))
        return out

    # WRITES
    # ======
    def _write(self, msg: Message) -> List[Message]:
        region = self.region_of(msg.address)
        entry = self.line(msg.address)
        self.writes += 1

        if msg.opcode is M2SRwD.MemWrPtl:
            entry.data = _merge(entry.data, msg.data, msg.byte_enable or 0)
        else:
            entry.data = msg.data
        entry.poison = msg.poison

        if msg.meta_field is MetaField.META0_STATE and msg.meta is not None:
            if region.kind is HdmKind.HDM_H:
                entry.meta = msg.meta
            elif region.kind is HdmKind.HDM_DB and msg.meta == META_INVALID:
                self.directory.remove(msg.line, msg.spid or 0)
            elif region.kind is HdmKind.HDM_D:
                self.bias[msg.line] = Bias.HOST_A if msg.meta == META_ANY else Bias.HOST_S

        return [self._ndr(msg)]

    def snapshot(self) -> tuple:
        return (tuple(sorted((line, e.data, e.meta, e.poison) for line, e in self.media.items())),
                None if self.directory is None else self.directory.snapshot(),
                tuple(sorted((line, t.needed.value, tuple(sorted(t.waiting)))
                             for line, t in self.bi_pending.items())))


def mem_read(dev: MemDevice, req: Message) -> List[Message]:
    assert req.opcode in _READS, ValueError(f'*** {req.opcode.value} IS NOT A READ ***')
    return dev.receive(req)


def mem_write(dev: MemDevice, req: Message) -> List[Message]:
    assert req.channel is Channel.M2S_RWD, ValueError(f'*** {req.opcode.value} IS NOT A WRITE ***')
    return dev.receive(req)


def bi_snoop(dev: MemDevice, address: Address, needed: DirState,
             targets: Optional[Sequence[int]] = None,
             request: Optional[Message] = None) -> List[Message]:
    """Back-Invalidate the conflicting hosts; `needed` picks the BISnp variant.

    E invalidates (BISnpInv), S downgrades (BISnpData), I only asks for the
    current data (BISnpCur).  The directory is updated, and `request` answered,
    once every BIRsp is back.
    """
    line = address.line
    if targets is None:
        targets = dev.directory.snoop_targets(line, requester=-1,
                                              exclusive=needed is DirState.E)

    dev.bi_pending[line] = _BiTxn(line=line, request=request, needed=needed,
                                  waiting=set(targets))
    opcode = _BI_OPCODE[needed]
    logger.debug('%s %#x %s -> hosts %s', dev.name, line, opcode.value, list(targets))
    return [Message(opcode=opcode, address=address.line_address(), tag=dev._tag(),   # pylint: disable=protected-access
                    dpid=host) for host in targets]


def snoop_filter_eviction(dev: MemDevice, victim: int) -> List[Message]:
    """Free the victim's directory entry by invalidating every host that may hold it."""
    sharers = sorted(dev.directory.sharers(victim))
    assert sharers, ValueError(f'*** VICTIM {victim:#x} HAS NO SHARERS ***')
    logger.debug('%s directory full: evicting %#x from hosts %s', dev.name, victim, sharers)
    return bi_snoop(dev, Address(hpa=victim), DirState.E, targets=sharers)
