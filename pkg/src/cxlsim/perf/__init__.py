"""CXLSim Performance Model: link efficiency, bandwidth & latency calculators."""


from sys import version_info

from .bandwidth import (CACHE_MIXES, IO_MIXES, MEM_MIXES, MemSlotCosts, MixKind,
                        TrafficMix, cache_bandwidth, io_bandwidth, mem_bandwidth,
                        mem_slot_costs)
from .latency import (CANNED_PATHS, LatencyComponent, LatencyPath, end_to_end_adder,
                      latency_estimate, switch_latency_adder)
from .link import (DEFAULT_LINK, ClockMode, LinkConfig, LinkProtocol, flit_time_ps,
                   link_efficiency, raw_bandwidth)
from .tables import IO_PAYLOADS, TABLE_NAMES, build_table, render_table
from .uio_bi import UIO_BI_PAYLOADS, FlowCost, flow_costs, uio_bi_tradeoff

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'CACHE_MIXES', 'IO_MIXES', 'MEM_MIXES', 'MemSlotCosts', 'MixKind', 'TrafficMix',
    'cache_bandwidth', 'io_bandwidth', 'mem_bandwidth', 'mem_slot_costs',
    'CANNED_PATHS', 'LatencyComponent', 'LatencyPath', 'end_to_end_adder',
    'latency_estimate', 'switch_latency_adder',
    'DEFAULT_LINK', 'ClockMode', 'LinkConfig', 'LinkProtocol', 'flit_time_ps',
    'link_efficiency', 'raw_bandwidth',
    'IO_PAYLOADS', 'TABLE_NAMES', 'build_table', 'render_table',
    'UIO_BI_PAYLOADS', 'FlowCost', 'flow_costs', 'uio_bi_tradeoff',
)
