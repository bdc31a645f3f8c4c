"""CXLSim Simulation Statistics.

Every statistic is a `metric,scope,value,unit` row; values are preformatted
with half-up rounding so the CSV of a run is byte-stable.
"""


from dataclasses import dataclass, field
from sys import version_info
from typing import Dict, List, Optional, Union   # Py3.9+: use generic types

import numpy
import pandas

from ..util import round_half_up
from .engine import PS_PER_NS

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'STATS_COLUMNS', 'LATENCY_PERCENTILES', 'SimStats', 'latency_summary'


STATS_COLUMNS: Sequence[str] = ('metric', 'scope', 'value', 'unit')

LATENCY_PERCENTILES: Sequence[int] = (50, 95, 99)


def latency_summary(latencies_ps: Sequence[int]) -> Dict[str, float]:
    """Mean and percentiles in ns; empty when nothing completed."""
    if not latencies_ps:
        return {}
    ns = numpy.asarray(latencies_ps, dtype=float) / PS_PER_NS
    summary = {f'p{p}': float(v)
               for p, v in zip(LATENCY_PERCENTILES, numpy.percentile(ns, LATENCY_PERCENTILES))}
    summary['mean'] = float(ns.mean())
    summary['max'] = float(ns.max())
    return summary


@dataclass
class SimStats:
    rows: List[Dict[str, str]] = field(default_factory=list)

    def add(self, metric: str, scope: str, value: Union[int, float, str], unit: str = ''):
        if isinstance(value, float):
            value = round_half_up(value, ndigits=3)
        self.rows.append({'metric': metric, 'scope': scope, 'value': str(value), 'unit': unit})

    def get(self, metric: str, scope: str = 'run') -> Optional[str]:
        for row in self.rows:
            if row['metric'] == metric and row['scope'] == scope:
                return row['value']
        return None

    def number(self, metric: str, scope: str = 'run') -> float:
        value = self.get(metric, scope)
        assert value is not None, KeyError(f'*** NO STAT {metric} @ {scope} ***')
        return float(value)

    @property
    def frame(self) -> pandas.DataFrame:
        return pandas.DataFrame(self.rows, columns=list(STATS_COLUMNS))

    def to_csv(self) -> str:
        return self.frame.to_csv(index=False)

    def __len__(self) -> int:
        return len(self.rows)
