"""CXLSim DevLoad Injection Control.

Devices report their load in every CXL.mem response; each source scales its
injection rate down at Moderate/Severe load and back up, capped at its nominal
rate, at Light load.
"""


from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import Dict   # Py3.9+: use generic types

import numpy

from ..protocol.fields import DevLoad

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DevLoadParams',
    'DevLoadState',
    'DevLoadController',
    'classify_load',
    'devload_update',
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DevLoadParams:
    severe: float = 0.5
    moderate: float = 0.8
    light: float = 1.1
    nominal_rate: float = 100.0   # requests per microsecond per source

    # utilisation bands the reference device reports
    light_below: float = 0.9
    moderate_above: float = 1.0
    severe_above: float = 1.25


def classify_load(utilisation: float, params: DevLoadParams = DevLoadParams()) -> DevLoad:
    if utilisation > params.severe_above:
        return DevLoad.SEVERE
    if utilisation > params.moderate_above:
        return DevLoad.MODERATE
    if utilisation < params.light_below:
        return DevLoad.LIGHT
    return DevLoad.OPTIMAL


@dataclass
class DevLoadState:
    level: DevLoad = DevLoad.OPTIMAL
    rates: Dict[str, float] = field(default_factory=dict)


def devload_update(state: DevLoadState, source: str, devload: DevLoad,
                   params: DevLoadParams = DevLoadParams()) -> float:
    """New injection rate of `source` after a response carrying `devload`."""
    rate = state.rates.get(source, params.nominal_rate)
    if devload is DevLoad.SEVERE:
        rate *= params.severe
    elif devload is DevLoad.MODERATE:
        rate *= params.moderate
    elif devload is DevLoad.LIGHT:
        rate = min(rate * params.light, params.nominal_rate)

    state.level = devload
    state.rates[source] = rate
    return rate


class DevLoadController:
    """Reference closed loop: sources throttled by one device's reported load."""

    def __init__(self, params: DevLoadParams = DevLoadParams()):
        self.params: DevLoadParams = params
        self.state: DevLoadState = DevLoadState()

    def update(self, source: str, devload: DevLoad) -> float:
        return devload_update(self.state, source, devload, self.params)

    def run_closed_loop(self, capacity: float, n_sources: int = 2, steps: int = 200,
                        start_rate: float = 0.0) -> numpy.ndarray:
        """Aggregate offered rate after each step against a device serving `capacity` req/us.

        Every source starts at `start_rate` (default: nominal) and nominal is
        `capacity / n_sources`, so the loop settles within 10% of capacity.
        """
        params = DevLoadParams(severe=self.params.severe, moderate=self.params.moderate,
                               light=self.params.light, nominal_rate=capacity / n_sources,
                               light_below=self.params.light_below,
                               moderate_above=self.params.moderate_above,
                               severe_above=self.params.severe_above)
        state = DevLoadState()
        sources = [f'S{i}' for i in range(n_sources)]
        for s in sources:
            state.rates[s] = start_rate or params.nominal_rate

        history = numpy.empty(steps)
        for step in range(steps):
            offered = sum(state.rates.values())
            level = classify_load(offered / capacity, params)
            for s in sources:
                devload_update(state, s, level, params)
            history[step] = sum(state.rates.values())
        logger.debug('closed loop: %d steps, final aggregate %.2f req/us (capacity %.2f)',
                     steps, history[-1] if steps else 0.0, capacity)
        return history
