"""CXLSim Multi-Host Sharing Directory.

Per-line coherence state (I/S/E) plus a sharing list.  Sharers are an exact
host set, or in coarse mode a set of host groups that over-approximates the
sharers and is snooped group-wide.  With a capacity bound the directory acts
as the device's snoop filter and evicts its least-recently-updated line.
"""


from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from sys import version_info
from typing import Dict, Iterator, List, Optional, Set   # Py3.9+: use generic types

from ..errors import MonitorViolation

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DirState',
    'DirectoryEntry',
    'Directory',
    'DirectoryMonitor',
)


class DirState(Enum):
    I = 'I'   # noqa: E741
    S = 'S'
    E = 'E'


@dataclass
class DirectoryEntry:
    line: int
    state: DirState = DirState.I
    # host IDs, or group indices for S entries in coarse mode
    sharers: Set[int] = field(default_factory=set)

    def check(self):
        assert self.state is not DirState.E or len(self.sharers) == 1, \
            ValueError(f'*** LINE {self.line:#x} E WITH SHARERS {sorted(self.sharers)} ***')
        assert self.state is not DirState.I or not self.sharers, \
            ValueError(f'*** LINE {self.line:#x} I WITH SHARERS {sorted(self.sharers)} ***')


class Directory:
    """Device-side directory / snoop filter over the hosts sharing a region."""

    def __init__(self, hosts: Sequence[int], group_size: int = 1,
                 capacity: Optional[int] = None):
        assert group_size >= 1, ValueError(f'*** GROUP SIZE {group_size} ***')
        assert capacity is None or capacity > 0, ValueError(f'*** CAPACITY {capacity} ***')
        self.hosts: List[int] = sorted(hosts)
        self.group_size: int = group_size
        self.capacity: Optional[int] = capacity
        self._entries: 'OrderedDict[int, DirectoryEntry]' = OrderedDict()

    @property
    def coarse(self) -> bool:
        return self.group_size > 1

    def group_of(self, host: int) -> int:
        return self.hosts.index(host) // self.group_size

    def group_hosts(self, group: int) -> List[int]:
        return self.hosts[group * self.group_size:(group + 1) * self.group_size]

    def __contains__(self, line: int) -> bool:
        return line in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[DirectoryEntry]:
        return iter(self._entries.values())

    @property
    def full(self) -> bool:
        return self.capacity is not None and len(self._entries) >= self.capacity

    def entry(self, line: int) -> DirectoryEntry:
        return self._entries.get(line) or DirectoryEntry(line=line)

    def sharers(self, line: int) -> Set[int]:
        """Hosts that may hold the line (expanded over groups in coarse mode)."""
        e = self.entry(line)
        if e.state is DirState.S and self.coarse:
            return {h for g in e.sharers for h in self.group_hosts(g)}
        return set(e.sharers)

    def snoop_targets(self, line: int, requester: int, exclusive: bool) -> List[int]:
        """Hosts to back-invalidate before `requester` gets the line."""
        e = self.entry(line)
        if e.state is DirState.I:
            return []
        if e.state is DirState.E:
            return [h for h in e.sharers if h != requester]
        return sorted(h for h in self.sharers(line) if h != requester) if exclusive else []

    # UPDATES
    # =======
    def _store(self, entry: DirectoryEntry):
        entry.check()
        if entry.state is DirState.I:
            self._entries.pop(entry.line, None)
        else:
            self._entries[entry.line] = entry
            self._entries.move_to_end(entry.line)

    def add_sharer(self, line: int, host: int):
        e = self.entry(line)
        if e.state is DirState.E:
            e.sharers = set()
        e.state = DirState.S
        e.sharers.add(self.group_of(host) if self.coarse else host)
        self._store(e)

    def set_exclusive(self, line: int, host: int):
        self._store(DirectoryEntry(line=line, state=DirState.E, sharers={host}))

    def remove(self, line: int, host: int):
        """Drop a host; coarse S groups only clear once the line is fully invalidated."""
        e = self.entry(line)
        if e.state is DirState.E and host in e.sharers:
            e.state, e.sharers = DirState.I, set()
        elif e.state is DirState.S and not self.coarse:
            e.sharers.discard(host)
            if not e.sharers:
                e.state = DirState.I
        self._store(e)

    def invalidate(self, line: int):
        self._entries.pop(line, None)

    def downgrade(self, line: int, host: int):
        e = self.entry(line)
        if e.state is DirState.E and host in e.sharers:
            e.state = DirState.S
            e.sharers = {self.group_of(host) if self.coarse else host}
            self._store(e)

    def victim(self, exclude: Sequence[int] = ()) -> Optional[int]:
        for line in self._entries:
            if line not in exclude:
                return line
        return None

    def snapshot(self) -> tuple:
        return tuple((line, e.state.value, tuple(sorted(e.sharers)))
                     for line, e in self._entries.items())


class DirectoryMonitor:
    """Directory soundness (cached ⊆ sharers), completeness when quiescent, cross-host SWMR."""

    def __init__(self):
        self.checks: int = 0

    def violations(self, domain) -> List[str]:
        out: List[str] = []
        directory: Directory = domain.device.directory

        cached: Dict[int, Dict[int, str]] = {}
        for host in domain.hosts.values():
            for line, entry in host.cache.items():
                if entry.state.valid:
                    cached.setdefault(line, {})[host.host_id] = entry.state.value

        for line, holders in sorted(cached.items()):
            listed = directory.sharers(line)
            missing = set(holders) - listed
            if missing:
                out.append(f'line {line:#x}: hosts {sorted(missing)} cache it, '
                           f'directory lists {sorted(listed)}')
            writers = [h for h, s in holders.items() if s in ('E', 'M')]
            if writers and len(holders) > 1:
                out.append(f'line {line:#x}: SWMR across hosts broken {holders}')

        if domain.quiescent and not directory.coarse:
            for entry in directory:
                actual = set(cached.get(entry.line, {}))
                if actual != entry.sharers:
                    out.append(f'line {entry.line:#x}: directory {entry.state.value}'
                               f'{sorted(entry.sharers)} but hosts {sorted(actual)} cache it')

        return out

    def check(self, domain, prefix: Sequence[str] = ()):
        self.checks += 1
        found = self.violations(domain)
        if found:
            raise MonitorViolation(f'DIRECTORY: {found[0]}', prefix=prefix, violations=found)
