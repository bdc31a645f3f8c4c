"""CXLSim Protocol Dependence Graph.

Nodes are channel groups per protocol layer (L1 = CXL.cache, L2 = host-internal
coherence, L3 = CXL.mem); an edge A -> B reads "A may block on B".  Deadlock
freedom across channels holds when the graph has no cycle.
"""


from dataclasses import dataclass
from sys import version_info
from typing import Iterable, List, Optional, Tuple   # Py3.9+: use generic types

import networkx as nx

from .opcodes import ProtocolLevel

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DependenceConfig',
    'DependenceGraph',
    'AcyclicityVerdict',
    'build_dependence_graph',
    'check_acyclic',
    'enumerate_cycles',
)


L1_REQ, L1_SNP, L1_RSP = 'L1-Req', 'L1-Snp', 'L1-Rsp'
L2_REQ, L2_SNP, L2_RSP = 'L2-Req', 'L2-Snp', 'L2-Rsp'
L3_REQ, L3_RWD, L3_RSP, L3_BISNP = 'L3-Req', 'L3-RwD', 'L3-Rsp', 'L3-BISnp'


@dataclass(frozen=True)
class DependenceConfig:
    """Which protocol layers are active."""

    cache: bool = False
    host_l2: bool = False
    mem: bool = False
    bi: bool = False

    def __post_init__(self):
        assert self.mem or not self.bi, \
            ValueError('*** BACK-INVALIDATE REQUIRES CXL.mem ***')

    @classmethod
    def for_level(cls, level: ProtocolLevel) -> 'DependenceConfig':
        return cls(cache=True, host_l2=True, mem=True,
                   bi=level is ProtocolLevel.CXL_3_0)


class DependenceGraph:
    """Directed may-block-on relation between channel groups."""

    def __init__(self, edges: Iterable[Tuple[str, str]] = (),
                 nodes: Iterable[str] = ()):
        self.graph: nx.DiGraph = nx.DiGraph()
        self.graph.add_nodes_from(nodes)
        self.graph.add_edges_from(edges)

    @property
    def nodes(self) -> List[str]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return sorted(self.graph.edges)

    def add_edge(self, src: str, dst: str) -> 'DependenceGraph':
        self.graph.add_edge(src, dst)
        return self

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def __contains__(self, edge: Tuple[str, str]) -> bool:
        return self.graph.has_edge(*edge)


@dataclass(frozen=True)
class AcyclicityVerdict:
    cycle: Optional[Tuple[str, ...]] = None

    @property
    def ok(self) -> bool:
        return self.cycle is None


def build_dependence_graph(config: DependenceConfig) -> DependenceGraph:
    """Dependence graph of the active layers."""
    g = DependenceGraph()

    if config.cache:
        g.add_edge(L1_REQ, L1_SNP).add_edge(L1_REQ, L1_RSP).add_edge(L1_SNP, L1_RSP)

    if config.host_l2:
        g.add_edge(L2_REQ, L2_SNP).add_edge(L2_REQ, L2_RSP).add_edge(L2_SNP, L2_RSP)
        if config.cache:
            # a device request may need the host-internal protocol, whose
            # snoops may in turn reach device caches
            g.add_edge(L1_REQ, L2_REQ).add_edge(L2_SNP, L1_SNP)

    if config.mem:
        g.add_edge(L3_REQ, L3_RSP).add_edge(L3_RWD, L3_RSP)
        for req in ((L1_REQ,) if config.cache else ()) + \
                   ((L2_REQ,) if config.host_l2 else ()):
            g.add_edge(req, L3_REQ).add_edge(req, L3_RWD)

        if config.bi:
            g.add_edge(L3_REQ, L3_BISNP).add_edge(L3_RWD, L3_BISNP)
            g.add_edge(L3_BISNP, L3_RSP)
            if config.cache:
                g.add_edge(L3_BISNP, L1_SNP)
            if config.host_l2:
                g.add_edge(L3_BISNP, L2_SNP)

    return g


def check_acyclic(g: DependenceGraph) -> AcyclicityVerdict:
    """`ok`, or the node sequence of one cycle."""
    try:
        cycle_edges = nx.find_cycle(g.graph, orientation='original')
    except nx.NetworkXNoCycle:
        return AcyclicityVerdict()

    return AcyclicityVerdict(cycle=tuple(edge[0] for edge in cycle_edges))


def enumerate_cycles(g: DependenceGraph) -> List[Tuple[str, ...]]:
    """All simple cycles."""
    return [tuple(c) for c in nx.simple_cycles(g.graph)]
