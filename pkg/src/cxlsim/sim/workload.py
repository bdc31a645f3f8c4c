"""CXLSim Workload Generators.

A fixed-mix workload repeats its mix unit (reads, then writes) over fresh
cache lines; reads never allocate in the host so every line costs one full
round trip.  A script lists timed operations.  Either way the operation at a
step depends on nothing but the workload's seed and the step number.
"""


from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from sys import version_info
from typing import Optional, Tuple   # Py3.9+: use generic types

import numpy

from ..errors import ConfigError, DomainError
from ..mem.region import HdmRegion
from ..perf.bandwidth import MEM_MIXES, MixKind, TrafficMix
from ..protocol.address import Address, LINE_BYTES
from ..util.config import HostWorkload
from .engine import PS_PER_NS

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'GeneratorKind',
    'OpKind',
    'WorkloadOp',
    'ScriptedOp',
    'WorkloadSpec',
    'workload_from_config',
)


# fixed-mix line indices start at a seed-derived offset below this bound
_OFFSET_SPAN: int = 1 << 10


class GeneratorKind(Enum):
    FIXED_MIX = 'fixed-mix'
    SCRIPT = 'script'


class OpKind(Enum):
    READ = 'read'                  # uncached
    READ_SHARED = 'read_shared'
    READ_EXCL = 'read_excl'
    WRITE = 'write'
    STORE = 'store'
    EVICT = 'evict'


@dataclass(frozen=True)
class WorkloadOp:
    kind: OpKind
    line: int   # line index inside the target region
    value: int = 0

    def address(self, region: HdmRegion) -> Address:
        address = Address(hpa=region.base + self.line * LINE_BYTES)
        if not region.contains(address):
            raise ConfigError(f'LINE {self.line} BEYOND {region}', line=self.line)
        return address


@dataclass(frozen=True)
class ScriptedOp:
    at_ps: int
    op: WorkloadOp


@dataclass(frozen=True)
class WorkloadSpec:   # pylint: disable=too-many-instance-attributes
    host: str
    device: str
    ld: Optional[int] = None

    kind: GeneratorKind = GeneratorKind.FIXED_MIX
    mix: Optional[TrafficMix] = None
    lines: int = 0
    duration_ps: Optional[int] = None
    start_ps: int = 0
    script: Tuple[ScriptedOp, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        if self.kind is GeneratorKind.FIXED_MIX:
            if self.mix is None or self.mix.kind not in MEM_MIXES:
                raise ConfigError(f'{self.host}: FIXED-MIX WORKLOADS DRIVE CXL.mem MIXES ONLY '
                                  f'({None if self.mix is None else self.mix.kind.value})',
                                  host=self.host)

    # FIXED MIX
    # =========
    @property
    def unit(self) -> Tuple[int, int]:
        return self.mix.kind.reads_writes

    @property
    def steps(self) -> int:
        if self.kind is GeneratorKind.SCRIPT:
            return len(self.script)
        reads, writes = self.unit
        per_unit = reads + writes
        return -(-self.lines // per_unit) * per_unit

    @cached_property
    def offset(self) -> int:
        return int(numpy.random.default_rng(self.seed).integers(_OFFSET_SPAN))

    def op(self, step: int) -> WorkloadOp:
        """Operation number `step`."""
        assert 0 <= step < self.steps, ValueError(f'*** STEP {step} OF {self.steps} ***')
        if self.kind is GeneratorKind.SCRIPT:
            return self.script[step].op

        reads, writes = self.unit
        unit, j = divmod(step, reads + writes)
        total_reads = self.steps // (reads + writes) * reads
        if j < reads:
            return WorkloadOp(kind=OpKind.READ, line=self.offset + unit * reads + j)
        line = self.offset + total_reads + unit * writes + (j - reads)
        return WorkloadOp(kind=OpKind.WRITE, line=line, value=(self.seed << 32) | step)

    def active(self, step: int, now_ps: int) -> bool:
        """Whether the fixed mix still issues operation `step` at `now_ps`."""
        if step >= self.steps or now_ps < self.start_ps:
            return False
        return self.duration_ps is None or now_ps < self.start_ps + self.duration_ps


def workload_from_config(entry: HostWorkload, device_type: int, seed: int) -> WorkloadSpec:
    if entry.kind == GeneratorKind.SCRIPT.value:
        script = tuple(ScriptedOp(at_ps=s.at_ns * PS_PER_NS,
                                  op=WorkloadOp(kind=OpKind(s.op), line=s.line, value=s.value))
                       for s in sorted(entry.steps, key=lambda s: s.at_ns))
        return WorkloadSpec(host=entry.host, device=entry.device, ld=entry.ld,
                            kind=GeneratorKind.SCRIPT, script=script, seed=seed)

    try:
        mix = TrafficMix(kind=MixKind(entry.mix.upper()), device_type=device_type)
    except (ValueError, DomainError) as err:
        raise ConfigError(f'{entry.host}: BAD MIX {entry.mix!r}: {err}', mix=entry.mix) from err
    return WorkloadSpec(host=entry.host, device=entry.device, ld=entry.ld,
                        kind=GeneratorKind.FIXED_MIX, mix=mix, lines=entry.lines,
                        duration_ps=(None if entry.duration_ns is None
                                     else entry.duration_ns * PS_PER_NS),
                        start_ps=entry.start_ns * PS_PER_NS, seed=seed)
