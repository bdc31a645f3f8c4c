"""CXLSim Discrete-Event Engine.

A thin layer over a `simpy.Environment` whose clock counts integer
picoseconds.  Every scheduled action is an `Event` addressed to a registered
component; simpy fires timeouts in (time, creation) order, which is exactly
the (time_ps, sequence) order events are numbered in.
"""


from dataclasses import dataclass, field
from enum import Enum
from itertools import count
import logging
from sys import version_info
from typing import Any, Dict, Iterator, Optional   # Py3.9+: use generic types

import numpy
import simpy

from ..errors import SimError

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'PS_PER_NS',
    'RNG_NAME',
    'EventAction',
    'Event',
    'Component',
    'Engine',
)


logger = logging.getLogger(__name__)


PS_PER_NS: int = 1000

RNG_NAME: str = 'numpy.PCG64'


class EventAction(Enum):
    DELIVER = 'deliver-message'
    TIMER = 'timer'
    FM_COMMAND = 'fm-command'
    WORKLOAD_STEP = 'workload-step'


@dataclass(frozen=True)
class Event:
    time_ps: int
    sequence: int
    target: str
    action: EventAction
    payload: Any = field(default=None, compare=False)


class Component:
    """Anything events can be addressed to."""

    def __init__(self, component_id: str, engine: 'Engine'):
        self.id: str = component_id
        self.engine: Engine = engine
        engine.register(self)

    def handle(self, event: Event):
        raise NotImplementedError

    @property
    def now(self) -> int:
        return self.engine.now


class Engine:
    """Single-threaded event loop of one simulation instance."""

    def __init__(self, seed: int = 0):
        self.env: simpy.Environment = simpy.Environment()
        self.seed: int = seed
        self.rng: numpy.random.Generator = numpy.random.default_rng(seed)

        self.components: Dict[str, Component] = {}
        self._sequence: Iterator[int] = count()
        self.executed: int = 0

    @property
    def now(self) -> int:
        return int(self.env.now)

    def register(self, component: Component):
        assert component.id not in self.components, \
            ValueError(f'*** DUPLICATE COMPONENT {component.id} ***')
        self.components[component.id] = component

    def schedule(self, delay_ps: int, target: str, action: EventAction,
                 payload: Any = None) -> Event:
        assert isinstance(delay_ps, int) and delay_ps >= 0, \
            ValueError(f'*** DELAY {delay_ps!r} IS NOT A NON-NEGATIVE INTEGER ***')
        if target not in self.components:
            raise SimError(f'EVENT FOR UNKNOWN COMPONENT {target}', target=target)

        event = Event(time_ps=self.now + delay_ps, sequence=next(self._sequence),
                      target=target, action=action, payload=payload)
        timeout = self.env.timeout(delay_ps)
        timeout.callbacks.append(lambda _: self._dispatch(event))
        return event

    def at(self, time_ps: int, target: str, action: EventAction, payload: Any = None) -> Event:
        assert time_ps >= self.now, ValueError(f'*** {time_ps} ps IS IN THE PAST ***')
        return self.schedule(time_ps - self.now, target, action, payload)

    def _dispatch(self, event: Event):
        self.executed += 1
        self.components[event.target].handle(event)

    @property
    def idle(self) -> bool:
        return self.env.peek() == simpy.core.Infinity

    def run(self, horizon_ps: Optional[int] = None) -> int:
        """Execute events up to the horizon (or until none are left); returns the clock."""
        if horizon_ps is not None and horizon_ps <= self.now:
            return self.now
        self.env.run(until=horizon_ps)
        logger.info('engine stopped at %d ps after %d events', self.now, self.executed)
        return self.now
