"""CXLSim CXL.io Observation Traces & Checkers.

Line format (blank lines and `#` comments ignored)::

    MODE legacy|uio
    INIT <loc> <value>
    <t> <agent> WR|RD <loc> <value> [<seq>]

Events are taken in `t` order.  A write's position in the trace is the point
at which it became visible; a read reports the value it returned.  The optional
`seq` is the event's position in its agent's program, for unordered paths where
visibility order differs; without it program order is trace order.
"""


from dataclasses import dataclass, field
from enum import Enum
from sys import version_info
from typing import Dict, List, Optional, Tuple   # Py3.9+: use generic types

from ..errors import MalformedTrace
from .ordering import OrderingMode

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'IoEvent',
    'IoTrace',
    'parse_io_trace',
    'format_io_trace',
    'check_producer_consumer',
    'SyncPattern',
    'SyncReport',
    'check_sync_patterns',
    'check_trace',
)


@dataclass(frozen=True)
class IoEvent:
    t: int
    agent: str
    op: str   # 'WR' | 'RD'
    loc: str
    value: str
    seq: Optional[int] = None

    def __str__(self) -> str:
        text = f'{self.t} {self.agent} {self.op} {self.loc} {self.value}'
        return text if self.seq is None else f'{text} {self.seq}'


@dataclass
class IoTrace:
    mode: OrderingMode = OrderingMode.LEGACY
    init: Dict[str, str] = field(default_factory=dict)
    events: List[IoEvent] = field(default_factory=list)

    @property
    def agents(self) -> List[str]:
        """Agents in order of first appearance."""
        return list(dict.fromkeys(e.agent for e in self.events))

    def program(self, agent: str) -> List[IoEvent]:
        return [e for e in self.events if e.agent == agent]

    def program_order(self, agent: str) -> List[IoEvent]:
        events = self.program(agent)
        return [e for _, e in sorted(enumerate(events),
                                     key=lambda ie: ie[0] if ie[1].seq is None else ie[1].seq)]

    def history(self) -> Dict[str, List[str]]:
        """Successive values of every location."""
        out: Dict[str, List[str]] = {loc: [v] for loc, v in self.init.items()}
        for e in self.events:
            if e.op == 'WR':
                out.setdefault(e.loc, []).append(e.value)
        return out


def parse_io_trace(text: str) -> IoTrace:
    trace = IoTrace()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        words = line.split()

        if words[0] == 'MODE' and len(words) == 2:
            try:
                trace.mode = OrderingMode(words[1].lower())
            except ValueError as err:
                raise MalformedTrace(f'LINE {n}: UNKNOWN MODE {words[1]!r}', line=n) from err

        elif words[0] == 'INIT' and len(words) == 3:
            trace.init[words[1]] = words[2]

        elif len(words) in (5, 6) and words[2] in ('WR', 'RD'):
            try:
                t = int(words[0])
                seq = int(words[5]) if len(words) == 6 else None
            except ValueError as err:
                raise MalformedTrace(f'LINE {n}: BAD TIME OR SEQUENCE', line=n) from err
            trace.events.append(IoEvent(t=t, agent=words[1], op=words[2], loc=words[3],
                                        value=words[4], seq=seq))

        else:
            raise MalformedTrace(f'LINE {n}: CANNOT PARSE {raw.strip()!r}', line=n)

    trace.events.sort(key=lambda e: e.t)
    return trace


def format_io_trace(trace: IoTrace) -> str:
    lines = [f'MODE {trace.mode.value}']
    lines += [f'INIT {loc} {value}' for loc, value in trace.init.items()]
    lines += [str(e) for e in trace.events]
    return '\n'.join(lines) + '\n'


# PRODUCER-CONSUMER
# =================
def check_producer_consumer(trace: IoTrace) -> List[str]:
    """Stale reads after observing a later write of the same producer.

    When a consumer reads a value written by producer P, every location P wrote
    earlier in program order must thereafter read at least that earlier value.
    """
    history = trace.history()

    def rank(loc: str, value: str) -> int:
        values = history.get(loc)
        if values is None or value not in values:
            raise MalformedTrace(f'VALUE {value} NEVER WRITTEN TO {loc}', loc=loc, value=value)
        return values.index(value)

    writers: Dict[Tuple[str, str], IoEvent] = {(e.loc, e.value): e
                                                for e in trace.events if e.op == 'WR'}
    violations: List[str] = []

    for consumer in trace.agents:
        floors: Dict[str, Tuple[int, IoEvent]] = {}
        for read in trace.program(consumer):
            if read.op != 'RD':
                continue

            floor = floors.get(read.loc)
            if floor is not None and rank(read.loc, read.value) < floor[0]:
                flag = floor[1]
                violations.append(f'{read}: stale after observing {flag.loc}={flag.value} '
                                  f'(outcome ({flag.value}, {read.value}))')

            write = writers.get((read.loc, read.value))
            if write is None or write.agent == consumer:
                continue
            for earlier in trace.program_order(write.agent):
                if earlier is write:
                    break
                if earlier.op == 'WR':
                    needed = rank(earlier.loc, earlier.value)
                    if needed > floors.get(earlier.loc, (-1, None))[0]:
                        floors[earlier.loc] = (needed, read)

    return violations


# SYNCHRONIZATION PATTERNS
# ========================
class SyncPattern(Enum):
    """Two devices, each writing its own flag and reading the other's."""

    WRITE_THEN_READ = 'write-then-read'
    READ_THEN_WRITE = 'read-then-write'


@dataclass(frozen=True)
class SyncReport:
    pattern: Optional[SyncPattern]
    outcome: Tuple[str, ...] = ()
    acceptable: bool = True

    def __str__(self) -> str:
        if self.pattern is None:
            return 'no synchronization pattern'
        verdict = 'ok' if self.acceptable else 'VIOLATION'
        return f'{self.pattern.value} outcome ({", ".join(self.outcome)}): {verdict}'


def check_sync_patterns(trace: IoTrace) -> SyncReport:
    """Classify a two-device write/read crossing and judge its outcome."""
    agents = trace.agents
    if len(agents) != 2:
        return SyncReport(pattern=None)

    programs = [trace.program(a) for a in agents]
    if any(sorted(e.op for e in p) != ['RD', 'WR'] for p in programs):
        return SyncReport(pattern=None)

    written = [next(e for e in p if e.op == 'WR') for p in programs]
    read = [next(e for e in p if e.op == 'RD') for p in programs]
    if read[0].loc != written[1].loc or read[1].loc != written[0].loc:
        raise MalformedTrace('SYNCHRONIZATION READS MUST TARGET THE OTHER DEVICE\'S WRITE',
                             agents=agents)

    first_is_write = [p[0].op == 'WR' for p in programs]
    if all(first_is_write):
        pattern = SyncPattern.WRITE_THEN_READ
    elif not any(first_is_write):
        pattern = SyncPattern.READ_THEN_WRITE
    else:
        return SyncReport(pattern=None)

    # outcome as (value of the first device's location, value of the second's)
    outcome = (read[1].value, read[0].value)
    both_old = all(r.value == trace.init.get(r.loc) for r in read)
    acceptable = not (both_old and pattern is SyncPattern.WRITE_THEN_READ and
                      trace.mode is OrderingMode.LEGACY)
    return SyncReport(pattern=pattern, outcome=outcome, acceptable=acceptable)


def check_trace(trace: IoTrace) -> List[str]:
    """All violations found by the producer-consumer and synchronization checkers."""
    violations = check_producer_consumer(trace)
    report = check_sync_patterns(trace)
    if not report.acceptable:
        violations.append(str(report))
    return violations
