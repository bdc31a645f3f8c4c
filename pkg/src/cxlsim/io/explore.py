"""CXLSim CXL.io Interleaving Explorer.

Small litmus scripts run over every legal interleaving.  Each source pushes its
TLPs into one of `paths` in-order queues towards memory; a TLP may arrive ahead
of earlier TLPs in its queue only where the ordering table lets it pass.  Reads
sample memory on arrival.  Legacy writes are posted (complete on issue); UIO
writes complete when their UioWrCpl gets back to the source.
"""


from dataclasses import dataclass, field
from functools import lru_cache
import logging
from sys import version_info
from typing import Dict, FrozenSet, List, Optional, Set, Tuple   # Py3.9+: use generic types

from ..errors import StateSpaceBudgetExceeded
from ..protocol.opcodes import IoOpcode
from .ordering import IoTlp, OrderingMode, OrderingVerdict, may_pass
from .trace import IoEvent, IoTrace, check_trace

if version_info >= (3, 9):
    from collections.abc import Collection, Sequence
else:
    from typing import Collection, Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Op',
    'Script',
    'PRODUCER_CONSUMER',
    'WRITE_THEN_READ',
    'READ_THEN_WRITE',
    'SCRIPTS',
    'ExplorationReport',
    'explore_script',
    'enumerate_outcomes',
    'uio_source_fence',
    'explore_uio_multipath',
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Op:
    op: str   # 'WR' | 'RD'
    loc: str
    value: str = ''
    after_completion: bool = False   # issue only once all earlier ops completed
    release: bool = False            # the write a source fence holds back


@dataclass(frozen=True)
class Script:
    name: str
    init: Tuple[Tuple[str, str], ...]
    programs: Tuple[Tuple[str, Tuple[Op, ...]], ...]
    outcome: Tuple[str, ...]   # locations read, in outcome order


# producer writes Data then Flag; consumer reads Flag, then Data
PRODUCER_CONSUMER = Script(
    name='producer-consumer',
    init=(('F', 'f'), ('D', 'd')),
    programs=(('P', (Op('WR', 'D', "d'"), Op('WR', 'F', "f'", release=True))),
              ('C', (Op('RD', 'F'), Op('RD', 'D', after_completion=True)))),
    outcome=('F', 'D'))

WRITE_THEN_READ = Script(
    name='write-then-read',
    init=(('a', 'a'), ('b', 'b')),
    programs=(('X', (Op('WR', 'a', "a'"), Op('RD', 'b'))),
              ('Y', (Op('WR', 'b', "b'"), Op('RD', 'a')))),
    outcome=('a', 'b'))

READ_THEN_WRITE = Script(
    name='read-then-write',
    init=(('a', 'a'), ('b', 'b')),
    programs=(('X', (Op('RD', 'b'), Op('WR', 'a', "a'"))),
              ('Y', (Op('RD', 'a'), Op('WR', 'b', "b'")))),
    outcome=('a', 'b'))

SCRIPTS: Dict[str, Script] = {s.name: s for s in (PRODUCER_CONSUMER, WRITE_THEN_READ,
                                                  READ_THEN_WRITE)}


def uio_source_fence(source: str, pending: Collection) -> bool:
    """Whether `source` may emit its release (Flag) write: no UioWr left uncompleted."""
    if pending:
        logger.debug('%s: release held, %d write completion(s) outstanding',
                     source, len(pending))
    return not pending


@dataclass
class ExplorationReport:
    script: str
    mode: OrderingMode
    fence: bool
    paths: int
    outcomes: Dict[Tuple[str, ...], IoTrace] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    states: int = 0

    @property
    def outcome_set(self) -> Set[Tuple[str, ...]]:
        return set(self.outcomes)

    def __str__(self) -> str:
        found = ', '.join(f'({", ".join(o)})' for o in sorted(self.outcomes))
        return (f'{self.script} [{self.mode.value}, paths={self.paths}, '
                f'fence={"on" if self.fence else "off"}]: {len(self.outcomes)} outcome(s) '
                f'{found}; {len(self.violations)} violation(s); {self.states} states')


_OpId = Tuple[int, int]   # (source index, op index)


@dataclass(frozen=True)
class _State:
    pc: Tuple[int, ...]
    queues: Tuple[Tuple[_OpId, ...], ...]   # [source * paths + path]
    returning: FrozenSet[_OpId]             # UioWrCpl in flight
    completed: FrozenSet[_OpId]
    memory: Tuple[Tuple[str, str], ...]
    log: Tuple[IoEvent, ...]


def explore_script(script: Script, mode: OrderingMode = OrderingMode.LEGACY,
                   fence: bool = False, paths: int = 1,
                   max_states: int = 1_000_000) -> ExplorationReport:
    """Every outcome reachable by `script`, with one witness trace per outcome."""
    assert paths >= 1, ValueError(f'*** PATHS {paths} ***')
    sources = [name for name, _ in script.programs]
    programs = [ops for _, ops in script.programs]
    vc = 0 if mode is OrderingMode.LEGACY else 1
    kinds = {'WR': IoOpcode.MemWr if vc == 0 else IoOpcode.UioWr,
             'RD': IoOpcode.MemRd if vc == 0 else IoOpcode.UioRd}

    @lru_cache(maxsize=None)
    def tlp(op_id: _OpId) -> IoTlp:
        return IoTlp(kind=kinds[programs[op_id[0]][op_id[1]].op], vc=vc, tag=op_id[1])

    def op_of(op_id: _OpId) -> Op:
        return programs[op_id[0]][op_id[1]]

    def issuable(state: _State, s: int) -> bool:
        k = state.pc[s]
        if k >= len(programs[s]):
            return False
        op = programs[s][k]
        earlier = {(s, j) for j in range(k)}
        if op.after_completion and not earlier <= state.completed:
            return False
        if fence and op.release:
            pending = {i for i in earlier
                       if op_of(i).op == 'WR' and i not in state.completed}
            return uio_source_fence(sources[s], pending)
        return True

    def arrivable(queue: Tuple[_OpId, ...], i: int) -> bool:
        return all(may_pass(tlp(queue[j]), tlp(queue[i]), mode)
                   is not OrderingVerdict.MUST_NOT_PASS for j in range(i))

    def successors(state: _State):
        for s in range(len(programs)):
            if issuable(state, s):
                op_id = (s, state.pc[s])
                posted = vc == 0 and op_of(op_id).op == 'WR'
                pc = state.pc[:s] + (state.pc[s] + 1,) + state.pc[s + 1:]
                completed = state.completed | {op_id} if posted else state.completed
                for p in range(paths):
                    q = s * paths + p
                    queues = state.queues[:q] + (state.queues[q] + (op_id,),) + \
                        state.queues[q + 1:]
                    yield _State(pc, queues, state.returning, completed, state.memory,
                                 state.log)

        for q, queue in enumerate(state.queues):
            for i, op_id in enumerate(queue):
                if not arrivable(queue, i):
                    continue
                op = op_of(op_id)
                memory = dict(state.memory)
                if op.op == 'WR':
                    memory[op.loc] = op.value
                    value = op.value
                else:
                    value = memory[op.loc]
                event = IoEvent(t=len(state.log), agent=sources[op_id[0]], op=op.op,
                                loc=op.loc, value=value, seq=op_id[1])
                queues = state.queues[:q] + (queue[:i] + queue[i + 1:],) + state.queues[q + 1:]
                returning, completed = state.returning, state.completed
                if op.op == 'RD':
                    completed = completed | {op_id}
                elif vc != 0:
                    returning = returning | {op_id}
                yield _State(state.pc, queues, returning, completed,
                             tuple(sorted(memory.items())), state.log + (event,))

        for op_id in state.returning:
            yield _State(state.pc, state.queues, state.returning - {op_id},
                         state.completed | {op_id}, state.memory, state.log)

    init = _State(pc=(0,) * len(programs), queues=((),) * (len(programs) * paths),
                  returning=frozenset(), completed=frozenset(),
                  memory=tuple(sorted(script.init)), log=())

    report = ExplorationReport(script=script.name, mode=mode, fence=fence, paths=paths)
    seen: Set[_State] = {init}
    stack = [init]
    while stack:
        state = stack.pop()
        terminal = True
        for nxt in successors(state):
            terminal = False
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise StateSpaceBudgetExceeded(f'MORE THAN {max_states} STATES',
                                                   script=script.name)
                stack.append(nxt)
        if terminal:
            read = {e.loc: e.value for e in state.log if e.op == 'RD'}
            outcome = tuple(read[loc] for loc in script.outcome)
            if outcome not in report.outcomes:
                report.outcomes[outcome] = IoTrace(mode=mode, init=dict(script.init),
                                                   events=list(state.log))

    report.states = len(seen)
    for outcome, witness in sorted(report.outcomes.items()):
        report.violations += check_trace(witness)
    logger.info('%s', report)
    return report


def enumerate_outcomes(script: Script, mode: OrderingMode = OrderingMode.LEGACY,
                       fence: bool = False, paths: int = 1) -> Set[Tuple[str, ...]]:
    return explore_script(script, mode=mode, fence=fence, paths=paths).outcome_set


def explore_uio_multipath(fence: bool, paths: int = 2,
                          script: Optional[Script] = None) -> ExplorationReport:
    """Producer-consumer over `paths` unordered UIO paths, with or without the source fence."""
    return explore_script(script or PRODUCER_CONSUMER, mode=OrderingMode.UIO,
                          fence=fence, paths=paths)
