"""CXLSim Host Snoop Filter."""


from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from sys import version_info
from typing import Dict, Iterator, Optional   # Py3.9+: use generic types

from ..errors import SnoopFilterFull
from ..protocol.fields import CacheState

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'HolderState', 'SnoopFilterEntry', 'SnoopFilter'


class HolderState(Enum):
    S = 'S'
    EM = 'E-or-M'

    @classmethod
    def of(cls, state: CacheState) -> 'HolderState':
        assert state.valid, ValueError('*** INVALID LINES ARE NOT TRACKED ***')
        return cls.EM if state.exclusive else cls.S


@dataclass
class SnoopFilterEntry:
    line: int
    holders: Dict[int, HolderState] = field(default_factory=dict)

    @property
    def owner(self) -> Optional[int]:
        for cache_id, state in self.holders.items():
            if state is HolderState.EM:
                return cache_id
        return None

    def check(self):
        assert self.owner is None or len(self.holders) == 1, \
            ValueError(f'*** LINE {self.line:#x}: E-or-M HOLDER NOT ALONE {self.holders} ***')


class SnoopFilter:
    """Exact line -> holders map with an advertised entry bound.

    Entries are kept in grant order; the least-recently-granted entry is the
    capacity-eviction victim.
    """

    def __init__(self, capacity: int = 4096):
        assert capacity > 0, ValueError(f'*** SNOOP FILTER CAPACITY {capacity} ***')
        self.capacity: int = capacity
        self._entries: 'OrderedDict[int, SnoopFilterEntry]' = OrderedDict()

    def __contains__(self, line: int) -> bool:
        return line in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[SnoopFilterEntry]:
        return iter(self._entries.values())

    @property
    def full(self) -> bool:
        return len(self._entries) >= self.capacity

    def holders(self, line: int) -> Dict[int, HolderState]:
        entry = self._entries.get(line)
        return dict(entry.holders) if entry else {}

    def grant(self, line: int, cache_id: int, state: CacheState):
        """Record a grant; raises SnoopFilterFull if a new entry does not fit."""
        entry = self._entries.get(line)
        if entry is None:
            if self.full:
                raise SnoopFilterFull(f'NO ENTRY FOR LINE {line:#x}', line=line,
                                      capacity=self.capacity)
            entry = self._entries[line] = SnoopFilterEntry(line=line)

        entry.holders[cache_id] = HolderState.of(state)
        entry.check()
        self._entries.move_to_end(line)

    def downgrade(self, line: int, cache_id: int):
        entry = self._entries.get(line)
        if entry and cache_id in entry.holders:
            entry.holders[cache_id] = HolderState.S

    def remove(self, line: int, cache_id: int):
        entry = self._entries.get(line)
        if entry is None:
            return
        entry.holders.pop(cache_id, None)
        if not entry.holders:
            del self._entries[line]

    def victim(self, exclude: Sequence[int] = ()) -> Optional[int]:
        """Least-recently-granted line not in `exclude`."""
        for line in self._entries:
            if line not in exclude:
                return line
        return None

    def snapshot(self) -> tuple:
        return tuple((line, tuple(sorted((c, s.value) for c, s in e.holders.items())))
                     for line, e in self._entries.items())
