"""CXLSim CXL.cache Coherence Monitors."""


from dataclasses import dataclass
from sys import version_info
from typing import Dict, List, Optional   # Py3.9+: use generic types

from ..errors import MonitorViolation
from ..protocol.fields import CacheState
from .domain import CacheDomain

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'Violation', 'CoherenceMonitor'


@dataclass(frozen=True)
class Violation:
    monitor: str
    detail: str

    def __str__(self) -> str:
        return f'{self.monitor}: {self.detail}'


class CoherenceMonitor:
    """SWMR, data-value, snoop-filter soundness and GO-push checks over a domain."""

    def __init__(self, swmr: bool = True, data_value: bool = True,
                 sf_soundness: bool = True, go_push: bool = True):
        self.swmr: bool = swmr
        self.data_value: bool = data_value
        self.sf_soundness: bool = sf_soundness
        self.go_push: bool = go_push
        self.checks: int = 0

    def violations(self, domain: CacheDomain) -> List[Violation]:
        out: List[Violation] = []

        if self.swmr:
            holders: Dict[int, Dict[str, CacheState]] = {}
            for dev in domain.devices:
                for line, entry in dev.lines.items():
                    if entry.state.valid:
                        holders.setdefault(line, {})[dev.name] = entry.state
            for line, entry in domain.host.cpu.items():
                if entry.state.valid:
                    holders.setdefault(line, {})[domain.host.name] = entry.state

            for line, states in sorted(holders.items()):
                writers = [a for a, s in states.items() if s.exclusive]
                if writers and len(states) > 1:
                    rendered = ' '.join(f'{a}={s.value}' for a, s in sorted(states.items()))
                    out.append(Violation(monitor='SWMR', detail=f'line {line:#x}: {rendered}'))

        if self.data_value:
            out.extend(Violation(monitor='DATA-VALUE',
                                 detail=f'{r.agent} read {r.value} from line {r.line:#x}, '
                                        f'last write was {r.expected}')
                       for r in domain.reads if not r.ok)

        if self.sf_soundness:
            for dev in domain.devices:
                for line, entry in sorted(dev.lines.items()):
                    if entry.state.valid and dev.cache_id not in domain.host.sf.holders(line):
                        out.append(Violation(
                            monitor='SNOOP-FILTER',
                            detail=f'{dev.name} holds line {line:#x} in {entry.state.value} '
                                   f'untracked by the host'))

        if self.go_push:
            out.extend(Violation(monitor='GO-PUSH',
                                 detail=f'{snoop.describe()} passed {go.describe()}')
                       for snoop, go in domain.go_push_violations)

        return out

    def check(self, domain: CacheDomain, prefix: Sequence[str] = ()):
        """Raise MonitorViolation (carrying the event prefix) on the first failed check."""
        self.checks += 1
        found = self.violations(domain)
        domain.reads.clear()
        if found:
            raise MonitorViolation(str(found[0]), prefix=prefix,
                                   violations=[str(v) for v in found])

    def first(self, domain: CacheDomain) -> Optional[Violation]:
        found = self.violations(domain)
        domain.reads.clear()
        return found[0] if found else None

