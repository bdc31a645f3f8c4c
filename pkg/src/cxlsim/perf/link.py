"""CXLSim Link Configuration & Efficiency."""


from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import ceil
from sys import version_info
from typing import FrozenSet   # Py3.9+: use generic types

from ..errors import DomainError
from ..flit.modes import FlitMode

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'ClockMode',
    'LinkProtocol',
    'LinkConfig',
    'DEFAULT_LINK',
    'raw_bandwidth',
    'link_efficiency',
    'flit_time_ps',
)


NATIVE_LANES: FrozenSet[int] = frozenset((16, 8, 4))
DEGRADED_LANES: FrozenSet[int] = frozenset((2, 1))
NATIVE_RATES: FrozenSet[int] = frozenset((32, 64))
DEGRADED_RATES: FrozenSet[int] = frozenset((16, 8))

SYNC_HDR: Fraction = Fraction(128, 130)
SKP: Fraction = Fraction(374, 375)
FLIT68_FRAMING: Fraction = Fraction(64, 68)
IO_DLLP: Fraction = Fraction(49, 50)   # 2% DLLP overhead in 68B mode


class ClockMode(Enum):
    """Reference clocking of a link; sets the port round-trip latency."""

    COMMON = 'common'
    INDEPENDENT = 'independent'


class LinkProtocol(Enum):
    IO = 'IO'
    CACHEMEM = 'CACHEMEM'


@dataclass(frozen=True)
class LinkConfig:
    """Width, rate and negotiated features of one link."""

    lanes: int = 16
    rate_gts: int = 32
    flit_mode: FlitMode = FlitMode.F68
    sync_hdr_bypass: bool = True
    clock_mode: ClockMode = ClockMode.COMMON

    def __post_init__(self):
        if self.lanes not in NATIVE_LANES | DEGRADED_LANES:
            raise DomainError(f'LINK WIDTH x{self.lanes} NOT SUPPORTED', lanes=self.lanes)
        if self.rate_gts not in NATIVE_RATES | DEGRADED_RATES:
            raise DomainError(f'LINK RATE {self.rate_gts} GT/s NOT SUPPORTED',
                              rate_gts=self.rate_gts)

    @property
    def degraded(self) -> bool:
        return self.lanes in DEGRADED_LANES or self.rate_gts in DEGRADED_RATES

    @property
    def raw_gbps(self) -> Fraction:
        return raw_bandwidth(self)


DEFAULT_LINK: LinkConfig = LinkConfig()


def raw_bandwidth(cfg: LinkConfig) -> Fraction:
    """Raw GB/s per direction: lanes x GT/s / 8."""
    return Fraction(cfg.lanes * cfg.rate_gts, 8)


def link_efficiency(cfg: LinkConfig, protocol: LinkProtocol) -> Fraction:
    """Fraction of raw bandwidth left after physical- and link-layer overheads."""
    if cfg.flit_mode is FlitMode.F68:
        eff = (1 if cfg.sync_hdr_bypass else SYNC_HDR) * SKP * FLIT68_FRAMING
        return eff * IO_DLLP if protocol is LinkProtocol.IO else eff

    if protocol is LinkProtocol.CACHEMEM:
        return Fraction(15, 16)

    # 256B: 20 bytes of Hdr/DLLP + FEC + CRC; latency-optimized: 24 bytes
    return Fraction(236 if cfg.flit_mode is FlitMode.F256 else 232, 256)


def flit_time_ps(cfg: LinkConfig) -> int:
    """Serialization time of one flit in integer picoseconds (rounded up)."""
    bits = Fraction(cfg.flit_mode.flit_bytes * 8)
    if cfg.flit_mode is FlitMode.F68:
        bits = bits / SKP / (1 if cfg.sync_hdr_bypass else SYNC_HDR)
    return ceil(bits * 1000 / (cfg.lanes * cfg.rate_gts))
