"""CXLSim Simulation Trace.

One record per message an agent sends or receives::

    T=<ps> <agent> TX|RX <channel> <opcode> A=<hex line> tag=<n> [state <old>-><new>] [flags]
"""


from dataclasses import dataclass, field
from sys import version_info
from typing import Iterable, List, Optional   # Py3.9+: use generic types

from ..protocol.fields import CacheState
from ..protocol.message import Message
from .engine import RNG_NAME

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'TRACE_HEADER', 'TraceRecorder', 'format_record'


TRACE_HEADER: str = '# cxlsim seed={seed} rng=' + RNG_NAME


def format_record(time_ps: int, agent: str, direction: str, msg: Message,
                  transition: Optional[Sequence[CacheState]] = None,
                  flags: Iterable[str] = ()) -> str:
    address = '-' if msg.address is None else f'{msg.address.line:#x}'
    words = [f'T={time_ps}', agent, direction, msg.channel.name, msg.opcode.value,
             f'A={address}', f'tag={msg.tag}']
    if transition is not None:
        old, new = transition
        words.append(f'state {old.value}->{new.value}')

    flags = list(flags)
    if msg.poison:
        flags.append('poison')
    if msg.ld_id is not None:
        flags.append(f'ld={msg.ld_id}')
    if msg.devload is not None:
        flags.append(f'devload={msg.devload.name}')
    return ' '.join(words + flags)


@dataclass
class TraceRecorder:
    seed: int = 0
    records: List[str] = field(default_factory=list)

    @property
    def header(self) -> str:
        return TRACE_HEADER.format(seed=self.seed)

    def record(self, time_ps: int, agent: str, direction: str, msg: Message,
               transition: Optional[Sequence[CacheState]] = None, flags: Iterable[str] = ()):
        self.records.append(format_record(time_ps, agent, direction, msg,
                                          transition=transition, flags=flags))

    def render(self) -> str:
        return '\n'.join([self.header] + self.records) + '\n'

    def __len__(self) -> int:
        return len(self.records)
