"""CXLSim Coherence Model Checker.

Depth-bounded exhaustive search over a small CXL.cache domain (one host, up
to a few caching devices, one or two lines).  A step either starts a request
from the alphabet or delivers the head of one channel; every reachable state
is checked by the coherence monitors and the first violation comes back with
the schedule that produced it.
"""


from copy import deepcopy
from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import Dict, Iterator, List, Optional, Tuple   # Py3.9+: use generic types

from tqdm import tqdm

from ..cache.domain import CacheDomain
from ..cache.monitor import CoherenceMonitor
from ..errors import CoherenceError, ConfigError, StateSpaceBudgetExceeded
from ..protocol.address import Address
from ..protocol.opcodes import D2HReq
from ..util.config import ExploreConfig

if version_info >= (3, 9):
    from collections.abc import Callable, Sequence
else:
    from typing import Callable, Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'HOST_ACTIONS',
    'DEVICE_ACTIONS',
    'ExploreReport',
    'explore',
    'explore_domain',
)


logger = logging.getLogger(__name__)


# host CPU accesses: (exclusive, stores)
HOST_ACTIONS: Dict[str, Tuple[bool, bool]] = {'SnpInv': (True, True), 'SnpData': (False, False)}

# device-side actions besides D2H requests
DEVICE_ACTIONS: Sequence[str] = ('Store',)


@dataclass
class ExploreReport:
    depth: int
    states: int = 0
    transitions: int = 0
    deepest: int = 0
    violation: Optional[str] = None
    witness: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violation is None

    def render(self) -> str:
        lines = [f'depth {self.depth}: {self.states} state(s), {self.transitions} transition(s), '
                 f'deepest {self.deepest}']
        if self.ok:
            lines.append('no violations')
        else:
            lines.append(f'VIOLATION {self.violation}')
            lines.extend(f'  {i + 1:3d}. {step}' for i, step in enumerate(self.witness))
        return '\n'.join(lines)


Action = Tuple[str, Callable[[CacheDomain], None]]


def _check_alphabet(alphabet: Sequence[str]):
    known = set(D2HReq.__members__) | set(HOST_ACTIONS) | set(DEVICE_ACTIONS)
    unknown = [a for a in alphabet if a not in known]
    if unknown:
        raise ConfigError(f'UNKNOWN ALPHABET ENTRIES {unknown}', alphabet=unknown)


def _actions(domain: CacheDomain, alphabet: Sequence[str], lines: int,
             value: int) -> Iterator[Action]:
    """Every step enabled in `domain`; `value` is what a store in this step writes."""
    addresses = [Address.of_line(i) for i in range(lines)]

    for entry in alphabet:
        for address in addresses:
            if entry in HOST_ACTIONS:
                exclusive, stores = HOST_ACTIONS[entry]
                yield (f'HOST {entry} A={address}',
                       lambda d, a=address, x=exclusive, s=stores:
                       d.host_access(a, exclusive=x, store_value=value if s else None))
                continue

            for dev in domain.devices:
                if entry == 'Store':
                    if dev.state(address).exclusive:
                        yield (f'{dev.name} Store A={address} value={value}',
                               lambda d, c=dev.cache_id, a=address: d.store(c, a, value))
                    continue
                yield (f'{dev.name} {entry} A={address}',
                       lambda d, c=dev.cache_id, a=address, o=D2HReq[entry]: d.issue(c, o, a))

    for delivery in domain.deliverable():
        yield (f'deliver {delivery.direction.value} DEV{delivery.cache_id} '
               f'{delivery.channel.name}',
               lambda d, x=delivery: d.deliver(x))


def explore_domain(n_devices: int = 2, lines: int = 1,
                   alphabet: Sequence[str] = ('RdShared', 'RdOwn', 'DirtyEvict', 'SnpInv'),
                   depth: int = 8, max_states: int = 1_000_000, go_push: bool = True,
                   sf_capacity: int = 4096, progress: bool = False) -> ExploreReport:
    """Explore every schedule of at most `depth` steps."""
    _check_alphabet(alphabet)
    monitor = CoherenceMonitor()
    report = ExploreReport(depth=depth)
    # fingerprint -> fewest steps it was reached in
    seen: Dict[tuple, int] = {}
    schedule: List[str] = []

    bar = tqdm(total=None, desc='explore', unit='state', disable=not progress, leave=False)

    def visit(domain: CacheDomain, steps: int) -> bool:
        fingerprint = domain.fingerprint()
        if seen.get(fingerprint, depth + 1) <= steps:
            return False
        seen[fingerprint] = steps
        report.states += 1
        report.deepest = max(report.deepest, steps)
        bar.update()
        if report.states > max_states:
            raise StateSpaceBudgetExceeded(f'MORE THAN {max_states} STATES WITHIN DEPTH {depth}',
                                           max_states=max_states, depth=depth)
        if steps == depth:
            return False

        for label, apply in list(_actions(domain, alphabet, lines, value=steps + 1)):
            child = deepcopy(domain)
            try:
                apply(child)
            except CoherenceError:
                continue   # not enabled in this state
            report.transitions += 1
            schedule.append(label)

            found = monitor.first(child)
            if found is not None:
                report.violation = str(found)
                report.witness = list(schedule)
                return True
            if visit(child, steps + 1):
                return True
            schedule.pop()
        return False

    try:
        visit(CacheDomain(n_devices=n_devices, sf_capacity=sf_capacity, go_push=go_push), 0)
    finally:
        bar.close()

    if report.ok:
        logger.info('explored %d state(s) to depth %d: no violations', report.states, depth)
    else:
        logger.warning('violation after %d step(s): %s', len(report.witness), report.violation)
    return report


def explore(config: ExploreConfig, depth: Optional[int] = None,
            progress: bool = False) -> ExploreReport:
    return explore_domain(n_devices=config.devices, lines=config.lines,
                          alphabet=config.alphabet,
                          depth=config.depth if depth is None else depth,
                          max_states=config.max_states, go_push=config.go_push,
                          sf_capacity=config.sf_capacity, progress=progress)
