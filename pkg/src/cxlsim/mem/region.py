"""CXLSim HDM Regions, Device Attributes & Host Decoders."""


from dataclasses import dataclass
from enum import Enum
import logging
import re
from sys import version_info
from typing import Dict, Iterable, List, Optional   # Py3.9+: use generic types

from ..errors import ConfigError, OutOfRange, RegionOverlap
from ..protocol.address import Address

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'HdmKind',
    'HdmRegion',
    'check_disjoint',
    'DeviceAttr',
    'parse_devattr',
    'format_devattr',
    'HdmDecoder',
    'HostDecoderSet',
)


logger = logging.getLogger(__name__)


MB: int = 1 << 20

# CXL fixed memory window: first HPA handed to hot-added HDM
CXL_WINDOW_BASE: int = 1 << 36
DECODER_GRANULE: int = 256 * MB


class HdmKind(Enum):
    """Host-managed Device Memory coherence flavours."""

    HDM_H = 'HDM-H'     # host-only coherent
    HDM_D = 'HDM-D'     # device coherent through bias flips
    HDM_DB = 'HDM-DB'   # device coherent through Back-Invalidate


@dataclass(frozen=True)
class HdmRegion:
    base: int
    size: int
    kind: HdmKind = HdmKind.HDM_H
    owner_device: str = 'D0'

    def __post_init__(self):
        assert self.size > 0, ValueError(f'*** EMPTY REGION AT {self.base:#x} ***')

    @property
    def end(self) -> int:
        return self.base + self.size

    def contains(self, address: Address) -> bool:
        return self.base <= address.hpa < self.end

    def overlaps(self, other: 'HdmRegion') -> bool:
        return self.base < other.end and other.base < self.end

    def __str__(self) -> str:
        return f'{self.kind.value}[{self.base:#x}, {self.end:#x}) @ {self.owner_device}'


def check_disjoint(regions: Iterable[HdmRegion]):
    """Raise RegionOverlap unless the regions are pairwise disjoint."""
    ordered = sorted(regions, key=lambda r: r.base)
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise RegionOverlap(f'{a} OVERLAPS {b}', regions=(a, b))


# DEVICE ATTRIBUTE RECORDS
# ========================
@dataclass(frozen=True)
class DeviceAttr:
    """Simplified coherent device attribute record read at hot-add."""

    device: str
    latency_ns: int
    bandwidth_gbs: int
    size_mb: int

    @property
    def size(self) -> int:
        return self.size_mb * MB


_DEVATTR_RE = re.compile(
    r'^DEVATTR\s+device=(?P<device>\S+)\s+latency_ns=(?P<latency_ns>\d+)\s+'
    r'bandwidth_gbs=(?P<bandwidth_gbs>\d+)\s+size_mb=(?P<size_mb>\d+)\s*$')


def parse_devattr(line: str) -> DeviceAttr:
    match = _DEVATTR_RE.match(line.strip())
    if match is None:
        raise ConfigError(f'MALFORMED DEVATTR RECORD: {line.strip()!r}', line=line)

    record = match.groupdict()
    attr = DeviceAttr(device=record['device'],
                      latency_ns=int(record['latency_ns']),
                      bandwidth_gbs=int(record['bandwidth_gbs']),
                      size_mb=int(record['size_mb']))
    if attr.size_mb == 0:
        raise ConfigError(f'DEVATTR {attr.device} HAS NO CAPACITY', line=line)
    return attr


def format_devattr(attr: DeviceAttr) -> str:
    return (f'DEVATTR device={attr.device} latency_ns={attr.latency_ns} '
            f'bandwidth_gbs={attr.bandwidth_gbs} size_mb={attr.size_mb}')


# HOST DECODERS
# =============
@dataclass(frozen=True)
class HdmDecoder:
    region: HdmRegion
    attr: Optional[DeviceAttr] = None


class HostDecoderSet:
    """Host HDM decoders; hot-added devices get the next free size-aligned HPA range."""

    def __init__(self, window_base: int = CXL_WINDOW_BASE):
        self.window_base: int = window_base
        self.decoders: List[HdmDecoder] = []

    @staticmethod
    def _alignment(size: int) -> int:
        return max(DECODER_GRANULE, 1 << (size - 1).bit_length())

    def _next_free(self, size: int) -> int:
        align = self._alignment(size)
        base = max([self.window_base] + [d.region.end for d in self.decoders])
        return -(-base // align) * align

    def program(self, attr: DeviceAttr, kind: HdmKind = HdmKind.HDM_H) -> HdmRegion:
        """Assign an HPA range to a device's memory and create its decoder."""
        region = HdmRegion(base=self._next_free(attr.size), size=attr.size, kind=kind,
                           owner_device=attr.device)
        self.add(region, attr=attr)
        logger.info('HDM decoder programmed: %s (%d ns, %d GB/s)',
                    region, attr.latency_ns, attr.bandwidth_gbs)
        return region

    def add(self, region: HdmRegion, attr: Optional[DeviceAttr] = None):
        check_disjoint([d.region for d in self.decoders] + [region])
        self.decoders.append(HdmDecoder(region=region, attr=attr))

    def remove(self, owner_device: str) -> List[HdmRegion]:
        """Drop the decoders of a removed device."""
        gone = [d.region for d in self.decoders if d.region.owner_device == owner_device]
        self.decoders = [d for d in self.decoders if d.region.owner_device != owner_device]
        return gone

    def decode(self, address: Address) -> HdmRegion:
        for decoder in self.decoders:
            if decoder.region.contains(address):
                return decoder.region
        raise OutOfRange(f'NO HDM DECODER COVERS {address.hpa:#x}', address=address)

    def by_device(self) -> Dict[str, List[HdmRegion]]:
        out: Dict[str, List[HdmRegion]] = {}
        for decoder in self.decoders:
            out.setdefault(decoder.region.owner_device, []).append(decoder.region)
        return out
