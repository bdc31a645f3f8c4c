"""CXLSim Fabric: switches, virtual hierarchies, the Fabric Manager, PBR, QoS & containment."""


from sys import version_info

from .containment import (DEFAULT_CONTAINMENT_TIMEOUT_PS, ErrorContainment, Outstanding,
                          contain_error, error_completion)
from .devload import (DevLoadController, DevLoadParams, DevLoadState, classify_load,
                      devload_update)
from .isl import CreditPool, IslDirection, IslPort
from .manager import (CCI_STUB_COMMANDS, FabricManager, FmCommand, FmCommandKind, FmResult,
                      HostEvent, HostEventKind, UnbindOption, fm_execute, parse_fm_script)
from .pbr import (EdgeDirection, EdgePort, FlowKey, PbrMessage, RoutingTables,
                  build_routing_tables, edge_translate, flow_key, pbr_route, routing_gaps)
from .switch import Fabric, SwitchModel, VirtualHierarchy, Vppb, logical_name, route_hbr
from .topology import (DeviceKind, FastTable, LinkSpec, Node, NodeKind, Topology, VcsSpec,
                       parse_topology, validate_topology)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DEFAULT_CONTAINMENT_TIMEOUT_PS', 'ErrorContainment', 'Outstanding', 'contain_error',
    'error_completion',
    'DevLoadController', 'DevLoadParams', 'DevLoadState', 'classify_load', 'devload_update',
    'CreditPool', 'IslDirection', 'IslPort',
    'CCI_STUB_COMMANDS', 'FabricManager', 'FmCommand', 'FmCommandKind', 'FmResult',
    'HostEvent', 'HostEventKind', 'UnbindOption', 'fm_execute', 'parse_fm_script',
    'EdgeDirection', 'EdgePort', 'FlowKey', 'PbrMessage', 'RoutingTables',
    'build_routing_tables', 'edge_translate', 'flow_key', 'pbr_route', 'routing_gaps',
    'Fabric', 'SwitchModel', 'VirtualHierarchy', 'Vppb', 'logical_name', 'route_hbr',
    'DeviceKind', 'FastTable', 'LinkSpec', 'Node', 'NodeKind', 'Topology', 'VcsSpec',
    'parse_topology', 'validate_topology',
)
