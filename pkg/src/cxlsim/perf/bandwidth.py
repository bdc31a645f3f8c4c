"""CXLSim Realizable-Bandwidth Model.

Slot accounting per traffic mix, scaled by link efficiency and raw bandwidth.
CXL.mem mixes are evaluated as a fluid schedule: each direction needs header
plus data slots per mix unit, the busier direction sets the unit rate, and in
256B formats at most the G slots of a flit may carry data.
"""


from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from sys import version_info
from typing import Dict, Tuple   # Py3.9+: use generic types

from ..errors import DomainError
from ..flit.modes import FlitMode
from .link import LinkConfig, LinkProtocol, link_efficiency, raw_bandwidth

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'MixKind',
    'TrafficMix',
    'MEM_MIXES',
    'IO_MIXES',
    'CACHE_MIXES',
    'MemSlotCosts',
    'mem_slot_costs',
    'mem_bandwidth',
    'cache_bandwidth',
    'io_bandwidth',
)


_F = Fraction


class MixKind(Enum):
    IO_READ = 'IO_READ'
    IO_WRITE = 'IO_WRITE'
    IO_RW5050 = 'IO_RW5050'
    MEM_1R0W = 'MEM_1R0W'
    MEM_1R1W = 'MEM_1R1W'
    MEM_2R1W = 'MEM_2R1W'
    CACHE_DEVREAD = 'CACHE_DEVREAD'
    CACHE_DEVWRITE = 'CACHE_DEVWRITE'

    @property
    def reads_writes(self) -> Tuple[int, int]:
        """(reads, writes) per unit of a CXL.mem mix."""
        return _MEM_RW[self]


_MEM_RW: Dict[MixKind, Tuple[int, int]] = {
    MixKind.MEM_1R0W: (1, 0),
    MixKind.MEM_1R1W: (1, 1),
    MixKind.MEM_2R1W: (2, 1),
}

MEM_MIXES: Tuple[MixKind, ...] = tuple(_MEM_RW)
IO_MIXES: Tuple[MixKind, ...] = (MixKind.IO_READ, MixKind.IO_WRITE, MixKind.IO_RW5050)
CACHE_MIXES: Tuple[MixKind, ...] = (MixKind.CACHE_DEVREAD, MixKind.CACHE_DEVWRITE)


@dataclass(frozen=True)
class TrafficMix:
    kind: MixKind
    payload_dw: int = 0
    device_type: int = 3

    def __post_init__(self):
        if self.kind in IO_MIXES and not 1 <= self.payload_dw <= 1024:
            raise DomainError(f'PAYLOAD {self.payload_dw} DW OUTSIDE 1..1024',
                              payload_dw=self.payload_dw)
        if self.device_type not in (2, 3):
            raise DomainError(f'DEVICE TYPE {self.device_type} HAS NO CXL.mem MIX',
                              device_type=self.device_type)


# CXL.mem
# =======
@dataclass(frozen=True)
class MemSlotCosts:
    """Slot cost of each CXL.mem header kind and per-flit slot budgets."""

    req: Fraction
    rwd: Fraction
    drs: Fraction
    ndr_write: Fraction
    ndr_read: Fraction
    budget: Fraction   # header+data slots per flit (per flit-equivalent for 68B)
    data_cap: Fraction


_MEM_COSTS: Dict[FlitMode, MemSlotCosts] = {
    # 68B: one request per slot; 2 DRS or 2 NDR share a slot
    FlitMode.F68: MemSlotCosts(req=_F(1), rwd=_F(1), drs=_F(1, 2), ndr_write=_F(1, 2),
                               ndr_read=_F(1, 2), budget=_F(4), data_cap=_F(4)),
    FlitMode.F256: MemSlotCosts(req=_F(1), rwd=_F(1), drs=_F(4, 9), ndr_write=_F(1, 3),
                                ndr_read=_F(1, 3), budget=_F(15), data_cap=_F(14)),
    FlitMode.F128LO: MemSlotCosts(req=_F(1), rwd=_F(1), drs=_F(17, 28), ndr_write=_F(1, 4),
                                  ndr_read=_F(3, 10), budget=_F(15), data_cap=_F(13)),
}


def mem_slot_costs(mode: FlitMode) -> MemSlotCosts:
    return _MEM_COSTS[mode]


def _mem_unit_slots(mode: FlitMode, mix: TrafficMix) -> Tuple[Tuple[Fraction, int],
                                                               Tuple[Fraction, int]]:
    """((M2S slots, M2S data slots), (S2M slots, S2M data slots)) per mix unit."""
    costs = _MEM_COSTS[mode]
    reads, writes = mix.kind.reads_writes

    m2s_data = 4 * writes
    m2s = reads * costs.req + writes * costs.rwd + m2s_data

    s2m_data = 4 * reads
    s2m = reads * costs.drs + s2m_data + writes * costs.ndr_write
    if mix.device_type == 2:
        s2m += reads * costs.ndr_read

    return (m2s, m2s_data), (s2m, s2m_data)


def mem_bandwidth(cfg: LinkConfig, mix: TrafficMix) -> Tuple[Fraction, Fraction]:
    """(M2S, S2M) data GB/s."""
    if mix.kind not in MEM_MIXES:
        raise DomainError(f'{mix.kind.value} IS NOT A CXL.mem MIX', mix=mix.kind)

    costs = _MEM_COSTS[cfg.flit_mode]
    directions = _mem_unit_slots(cfg.flit_mode, mix)

    # units per flit, limited by the busier direction's slots and the data cap
    units = min(min(costs.budget / slots, costs.data_cap / data if data else costs.budget)
                for slots, data in directions)

    if cfg.flit_mode is FlitMode.F68:
        per_slot = link_efficiency(cfg, LinkProtocol.CACHEMEM) * raw_bandwidth(cfg) / 4
    else:
        per_slot = raw_bandwidth(cfg) / 16

    m2s, s2m = (units * data * per_slot for _, data in directions)
    return m2s, s2m


# CXL.cache
# =========
def cache_bandwidth(cfg: LinkConfig, mix: TrafficMix) -> Fraction:
    """Device read (H2D data) or device write (D2H data) GB/s.

    68B reads pack 4 data headers per slot (16 data / 17 slots); 68B writes need
    two header slots per line (RdOwn + data header, DirtyEvict).  In 256B formats
    reads are data-slot bound and writes cost 1 + 1 + 1/2 + 4 slots per line:
    the D2H data header carries a byte-enable extension and takes half a slot.
    """
    raw = raw_bandwidth(cfg)

    if cfg.flit_mode is FlitMode.F68:
        eff = link_efficiency(cfg, LinkProtocol.CACHEMEM)
        if mix.kind is MixKind.CACHE_DEVREAD:
            return _F(16, 17) * eff * raw
        if mix.kind is MixKind.CACHE_DEVWRITE:
            return _F(4, 6) * eff * raw

    else:
        if mix.kind is MixKind.CACHE_DEVREAD:
            return _F(14 if cfg.flit_mode is FlitMode.F256 else 13, 16) * raw
        if mix.kind is MixKind.CACHE_DEVWRITE:
            return _F(4) / _F(13, 2) * link_efficiency(cfg, LinkProtocol.CACHEMEM) * raw

    raise DomainError(f'{mix.kind.value} IS NOT A CXL.cache MIX', mix=mix.kind)


# CXL.io
# ======
_IO_READ_OVERHEAD_DW: int = 3    # completion header
_IO_WRITE_OVERHEAD_DW: int = 4   # 64-bit address memory write header
_IO_RW_OVERHEAD_DW: int = 8      # memory write + memory read request headers
_F68_FRAMING_DW: int = 2         # STP/sequence token + LCRC


def io_bandwidth(cfg: LinkConfig, mix: TrafficMix) -> Fraction:
    """Realizable CXL.io data GB/s (50-50 sums both directions).

    Each stream is limited by its data-carrying direction: reads by completions
    (3 DW header + d), writes by memory writes (4 DW header + d).  In a 50-50 mix
    the host-to-device direction carries a write (4 + d) and the read request
    for the paired read (4 DW), and is the busier one; the pair moves 2d DW of
    data.  68B flits frame every TLP with a 1 DW token and a 1 DW LCRC; the
    256B formats protect TLPs at flit level and add no per-TLP framing.
    """
    if mix.kind not in IO_MIXES:
        raise DomainError(f'{mix.kind.value} IS NOT A CXL.io MIX', mix=mix.kind)

    d = mix.payload_dw
    framing = _F68_FRAMING_DW if cfg.flit_mode is FlitMode.F68 else 0
    scale = link_efficiency(cfg, LinkProtocol.IO) * raw_bandwidth(cfg)

    if mix.kind is MixKind.IO_READ:
        return _F(d, d + _IO_READ_OVERHEAD_DW + framing) * scale

    if mix.kind is MixKind.IO_WRITE:
        return _F(d, d + _IO_WRITE_OVERHEAD_DW + framing) * scale

    return _F(2 * d, d + _IO_RW_OVERHEAD_DW + 2 * framing) * scale
