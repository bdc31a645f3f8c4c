"""CXLSim Port-Based Routing.

Edge ports translate between hierarchical messages and PBR messages carrying a
12-bit destination (and source) PID; switches in between route on the DPID
alone through Fabric-Manager-distributed tables.  Unordered traffic may use any
listed egress port; ordered flows hash a flow key onto one of them so that
every message of the flow takes the same path.
"""


from dataclasses import dataclass, field
from enum import Enum
import logging
from sys import version_info
from typing import Dict, FrozenSet, Iterable, Optional, Set, Tuple, Union   # Py3.9+: use generic types

import networkx as nx
from numpy.random import Generator

from ..errors import NoRoute, UnmappedId
from ..flit.crc import crc48
from ..protocol.address import MAX_LDS, PID_BITS
from ..protocol.channels import Channel, Protocol
from ..protocol.message import Message
from .switch import SwitchModel
from .topology import FastTable, Topology

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'PbrMessage',
    'EdgeDirection',
    'EdgePort',
    'edge_translate',
    'FlowKey',
    'flow_key',
    'pbr_route',
    'RoutingTables',
    'build_routing_tables',
    'routing_gaps',
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PbrMessage:
    inner: Message
    dpid: int
    spid: Optional[int] = None

    def __post_init__(self):
        assert 0 <= self.dpid < (1 << PID_BITS), ValueError(f'*** DPID {self.dpid} ***')
        assert self.spid is None or 0 <= self.spid < (1 << PID_BITS), \
            ValueError(f'*** SPID {self.spid} ***')


class EdgeDirection(Enum):
    TO_FABRIC = 'to-fabric'
    FROM_FABRIC = 'from-fabric'


@dataclass(frozen=True)
class EdgePort:
    """Lookup tables of one PBR edge port (the attached entity owns `pid`).

    `ld_pids` is the 16-deep LD-ID -> PID table of an MLD edge; `cache_pids`
    maps a host's CacheIDs to device PIDs; `upstream_pid` is where LD-less
    upstream traffic (an SLD's responses, D2H requests) goes.
    """

    pid: int
    fast: Optional[FastTable] = None
    ld_pids: Tuple[Optional[int], ...] = ()
    cache_pids: Dict[int, int] = field(default_factory=dict)
    upstream_pid: Optional[int] = None

    def __post_init__(self):
        assert len(self.ld_pids) <= MAX_LDS, \
            ValueError(f'*** {len(self.ld_pids)} LD-ID TABLE ENTRIES ***')

    def _ld_pid(self, ld_id: int) -> int:
        pid = self.ld_pids[ld_id] if ld_id < len(self.ld_pids) else None
        if pid is None:
            raise UnmappedId(f'LD-ID {ld_id} NOT MAPPED AT EDGE PID {self.pid}', ld_id=ld_id)
        return pid

    def dpid_for(self, msg: Message) -> int:
        if msg.dpid is not None:   # fabric-aware sources (GFDs) address peers directly
            return msg.dpid

        if msg.channel in (Channel.H2D_REQ, Channel.H2D_RSP, Channel.H2D_DATA):
            if msg.cache_id is None or msg.cache_id not in self.cache_pids:
                raise UnmappedId(f'CacheID {msg.cache_id} NOT MAPPED AT EDGE PID {self.pid}',
                                 cache_id=msg.cache_id)
            return self.cache_pids[msg.cache_id]

        if msg.channel.upstream or msg.address is None:
            if msg.ld_id is not None and self.ld_pids:
                return self._ld_pid(msg.ld_id)
            if self.upstream_pid is None:
                raise UnmappedId(f'NO UPSTREAM PID AT EDGE PID {self.pid}', opcode=msg.opcode)
            return self.upstream_pid

        if msg.address is not None and self.fast is not None:
            return self.fast.lookup(msg.address.hpa)
        raise UnmappedId(f'{msg.opcode.value}: NO FAST AT EDGE PID {self.pid}',
                         opcode=msg.opcode)

    def ld_of(self, spid: Optional[int]) -> Optional[int]:
        return self.ld_pids.index(spid) if spid is not None and spid in self.ld_pids else None


def edge_translate(msg: Union[Message, PbrMessage], direction: EdgeDirection,
                   edge: EdgePort) -> Union[PbrMessage, Message]:
    """Stateless HBR <-> PBR translation at an edge port."""
    if direction is EdgeDirection.TO_FABRIC:
        assert isinstance(msg, Message), TypeError(f'*** {type(msg).__name__} ***')
        return PbrMessage(inner=msg, dpid=edge.dpid_for(msg), spid=edge.pid)

    assert isinstance(msg, PbrMessage), TypeError(f'*** {type(msg).__name__} ***')
    inner = msg.inner
    ld_id = edge.ld_of(msg.spid)
    return inner.evolve(ld_id=inner.ld_id if ld_id is None else ld_id)


# FLOW PINNING
# ============
FlowKey = Tuple[str, str, int]


def flow_key(msg: Message) -> Optional[FlowKey]:
    """(protocol, channel class, line index or tag) of an ordered flow; None if unordered."""
    if msg.protocol is Protocol.IO:
        return None if msg.opcode.unordered else ('CXL.io', 'ordered', 0)

    if msg.channel in (Channel.H2D_REQ, Channel.H2D_RSP):
        # snoops push GO to the same address
        key = msg.address.line_index if msg.address is not None else msg.tag
        return ('CXL.cache', 'snoop-go', key)

    if msg.channel is Channel.S2M_NDR:
        return ('CXL.mem', 'NDR', msg.tag)

    return None


def pbr_route(pmsg: PbrMessage, switch: SwitchModel,
              rng: Optional[Generator] = None) -> int:
    ports = switch.routing.get(pmsg.dpid)
    if not ports:
        raise NoRoute(f'{switch.id}: NO ROUTE FOR DPID {pmsg.dpid}', switch=switch.id,
                      dpid=pmsg.dpid)
    if len(ports) == 1:
        return ports[0]

    key = flow_key(pmsg.inner)
    if key is None:
        if rng is None:
            return ports[0]
        return ports[int(rng.integers(len(ports)))]
    return ports[crc48(repr((pmsg.spid, pmsg.dpid) + key).encode()) % len(ports)]


# ROUTING TABLES
# ==============
RoutingTables = Dict[str, Dict[int, Tuple[int, ...]]]


def _surviving_graph(topology: Topology, down: Set[FrozenSet[str]]) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(topology.nodes)
    g.add_edges_from((link.a, link.b) for link in topology.links
                     if frozenset((link.a, link.b)) not in down)
    return g


def build_routing_tables(topology: Topology,
                         failed: Iterable[Tuple[str, str]] = ()) -> RoutingTables:
    """Per switch: DPID -> every egress port on an equal-cost shortest path.

    Paths never transit a host or a device.
    """
    down = {frozenset(pair) for pair in failed}
    g = _surviving_graph(topology, down)

    switches = [s.id for s in topology.switches]
    tables: RoutingTables = {s: {} for s in switches}
    for target in (n for n in topology.nodes.values() if n.edge):
        # the switch-only graph plus the target itself
        sub = g.subgraph(switches + [target.id])
        for switch in switches:
            if not nx.has_path(sub, switch, target.id):
                continue
            hops = {path[1] for path in nx.all_shortest_paths(sub, switch, target.id)}
            ports = tuple(port for port, peer, link in topology.ports(switch)
                          if peer in hops and frozenset((link.a, link.b)) not in down)
            tables[switch][topology.pid_of(target.id)] = ports
    return tables


def routing_gaps(topology: Topology, tables: RoutingTables,
                 failed: Iterable[Tuple[str, str]] = ()) -> Dict[str, Tuple[int, ...]]:
    """Per switch: PIDs of edge entities its switch fabric reaches without a live route.

    A route is live while one of its egress ports sits on a surviving link.
    """
    down = {frozenset(pair) for pair in failed}
    g = _surviving_graph(topology, down)
    core = g.subgraph(s.id for s in topology.switches)

    out: Dict[str, Tuple[int, ...]] = {}
    for switch, routes in tables.items():
        reachable = {peer for s in nx.node_connected_component(core, switch)
                     for peer in g.neighbors(s)}
        links = topology.ports(switch)

        def live(pid: int) -> bool:
            return any(frozenset((links[p][2].a, links[p][2].b)) not in down
                       for p in routes.get(pid, ()))

        gaps = tuple(sorted(n.pid for n in topology.nodes.values()
                            if n.edge and n.id in reachable and not live(n.pid)))
        if gaps:
            out[switch] = gaps
    return out
