"""CXLSim Simulation: discrete-event engine, components, workloads & the coherence explorer."""


from sys import version_info

from .components import (FM_COMPONENT, DeviceNode, DirectoryView, FabricManagerNode, HostNode,
                         NodeComponent, Request, SimContext, SwitchNode)
from .engine import PS_PER_NS, RNG_NAME, Component, Engine, Event, EventAction
from .explore import DEVICE_ACTIONS, HOST_ACTIONS, ExploreReport, explore, explore_domain
from .link import LinkPort, LinkStats, Transit, credit_pools
from .run import MONITORS, SimResult, run, run_repeated
from .stats import LATENCY_PERCENTILES, STATS_COLUMNS, SimStats, latency_summary
from .trace import TRACE_HEADER, TraceRecorder, format_record
from .workload import (GeneratorKind, OpKind, ScriptedOp, WorkloadOp, WorkloadSpec,
                       workload_from_config)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'FM_COMPONENT', 'DeviceNode', 'DirectoryView', 'FabricManagerNode', 'HostNode',
    'NodeComponent', 'Request', 'SimContext', 'SwitchNode',
    'PS_PER_NS', 'RNG_NAME', 'Component', 'Engine', 'Event', 'EventAction',
    'DEVICE_ACTIONS', 'HOST_ACTIONS', 'ExploreReport', 'explore', 'explore_domain',
    'LinkPort', 'LinkStats', 'Transit', 'credit_pools',
    'MONITORS', 'SimResult', 'run', 'run_repeated',
    'LATENCY_PERCENTILES', 'STATS_COLUMNS', 'SimStats', 'latency_summary',
    'TRACE_HEADER', 'TraceRecorder', 'format_record',
    'GeneratorKind', 'OpKind', 'ScriptedOp', 'WorkloadOp', 'WorkloadSpec',
    'workload_from_config',
)
