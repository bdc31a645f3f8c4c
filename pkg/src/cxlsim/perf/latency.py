"""CXLSim Idle-Latency Composition."""


from dataclasses import dataclass
from sys import version_info
from typing import Dict, Tuple   # Py3.9+: use generic types

from .link import ClockMode

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'CPU_LOAD_TO_USE_NS',
    'PORT_ROUND_TRIP_NS',
    'RETIMER_ROUND_TRIP_NS',
    'FLIGHT_NS',
    'SWITCH_ARB_NS',
    'DEVICE_PIN_TO_PIN_NS',
    'SNOOP_RESPONSE_NS',
    'LatencyComponent',
    'LatencyPath',
    'latency_estimate',
    'end_to_end_adder',
    'switch_latency_adder',
    'CANNED_PATHS',
)


CPU_LOAD_TO_USE_NS: int = 100   # "< 100 ns", pinned
PORT_ROUND_TRIP_NS: Dict[ClockMode, int] = {ClockMode.COMMON: 21, ClockMode.INDEPENDENT: 25}
RETIMER_ROUND_TRIP_NS: int = 15
FLIGHT_NS: int = 10
SWITCH_ARB_NS: int = 10
DEVICE_PIN_TO_PIN_NS: int = 80
SNOOP_RESPONSE_NS: int = 50


@dataclass(frozen=True)
class LatencyComponent:
    name: str
    ns: int


@dataclass(frozen=True)
class LatencyPath:
    name: str
    components: Tuple[LatencyComponent, ...]

    def __iter__(self):
        return iter(self.components)


def latency_estimate(path: LatencyPath) -> int:
    """Idle latency in ns: the sum of the path's components."""
    return sum(c.ns for c in path)


def end_to_end_adder(clock_mode: ClockMode = ClockMode.COMMON) -> int:
    """CXL port round trip on both ends plus retimer flight."""
    return 2 * PORT_ROUND_TRIP_NS[clock_mode] + RETIMER_ROUND_TRIP_NS


def switch_latency_adder(clock_mode: ClockMode = ClockMode.COMMON) -> int:
    """Round-trip adder of one switch: two ports, arbitration and wire flight."""
    return 2 * PORT_ROUND_TRIP_NS[clock_mode] + SWITCH_ARB_NS + FLIGHT_NS


def _path(name: str, *components: Tuple[str, int]) -> LatencyPath:
    return LatencyPath(name=name,
                       components=tuple(LatencyComponent(name=n, ns=ns) for n, ns in components))


_LOCAL = (('CPU load-to-use', CPU_LOAD_TO_USE_NS),
          ('CXL stack round-trip', SNOOP_RESPONSE_NS),
          ('wire flight', FLIGHT_NS),
          ('retimer round-trip', 10))

CANNED_PATHS: Dict[str, LatencyPath] = {
    path.name: path for path in (
        _path('direct-type3', *_LOCAL),
        _path('switched-type3',
              ('CPU load-to-use', CPU_LOAD_TO_USE_NS),
              ('CXL switch w/ link flight', 70),
              ('Type-3 device pin-to-pin', DEVICE_PIN_TO_PIN_NS)),
        _path('peer-one-switch', *_LOCAL,
              ('switch/SMC', 40),
              ('one-way flight w/ retimer', FLIGHT_NS)),
        _path('peer-two-switches', *_LOCAL,
              ('switch/SMC', 40), ('one-way flight w/ retimer', FLIGHT_NS),
              ('switch/SMC', 40), ('one-way flight w/ retimer', FLIGHT_NS)),
    )
}
