"""CXLSim Fabric Topology.

Line-oriented topology files (`#` starts a comment)::

    HOST <id>
    SWITCH <id>
    DEVICE <id> type=<1|2|3> kind=<SLD|MLD|GFD> [lds=<n>]
    LINK <a> <b> width=<lanes> gts=<rate> [retimer]
    FAST <switch> base=<hex> segsize=<hex> map=<pid,...>
    VCS <switch> <host> vppbs=<n>
    PID <entity> <pid>

Switch ports are numbered from 0 in the order the switch's LINK lines appear.
Hosts and devices without a PID line get the lowest free PIDs in declaration
order.  Unless a VCS line says otherwise, every host that can reach a switch
with device ports gets a virtual CXL switch there with one vPPB per logical
device on those ports.
"""


from dataclasses import dataclass, field
from enum import Enum
import logging
import re
from sys import version_info
from typing import Dict, List, Optional, Tuple   # Py3.9+: use generic types

import networkx as nx

from ..errors import NoFastSegment, TopologyParseError
from ..flit.modes import FlitMode
from ..perf.link import LinkConfig
from ..protocol.address import MAX_LDS, MAX_PIDS
from ..protocol.dependence import DependenceConfig, build_dependence_graph, check_acyclic
from ..protocol.opcodes import ProtocolLevel

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'NodeKind',
    'DeviceKind',
    'Node',
    'LinkSpec',
    'FastTable',
    'VcsSpec',
    'Topology',
    'parse_topology',
    'validate_topology',
)


logger = logging.getLogger(__name__)


class NodeKind(Enum):
    HOST = 'HOST'
    SWITCH = 'SWITCH'
    DEVICE = 'DEVICE'


class DeviceKind(Enum):
    SLD = 'SLD'
    MLD = 'MLD'
    GFD = 'GFD'


@dataclass
class Node:
    id: str
    kind: NodeKind
    device_type: Optional[int] = None
    device_kind: Optional[DeviceKind] = None
    lds: int = 1
    pid: Optional[int] = None

    @property
    def edge(self) -> bool:
        """Hosts and devices sit at the fabric edge and own PIDs."""
        return self.kind is not NodeKind.SWITCH


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    width: int = 16
    gts: int = 32
    retimer: bool = False

    def link_config(self, flit_mode: FlitMode = FlitMode.F68) -> LinkConfig:
        return LinkConfig(lanes=self.width, rate_gts=self.gts, flit_mode=flit_mode)

    def other(self, end: str) -> str:
        return self.b if end == self.a else self.a


@dataclass(frozen=True)
class FastTable:
    """Fabric Address Segment Table: power-of-two HPA segments, one PID each."""

    base: int
    segsize: int
    pids: Tuple[int, ...]

    def __post_init__(self):
        assert self.segsize > 0 and not self.segsize & (self.segsize - 1), \
            ValueError(f'*** FAST SEGMENT SIZE {self.segsize:#x} NOT A POWER OF TWO ***')

    @property
    def limit(self) -> int:
        return self.base + self.segsize * len(self.pids)

    def segment(self, hpa: int) -> int:
        if not self.base <= hpa < self.limit:
            raise NoFastSegment(f'HPA {hpa:#x} OUTSIDE FAST [{self.base:#x}, {self.limit:#x})',
                                hpa=hpa)
        return (hpa - self.base) >> (self.segsize.bit_length() - 1)

    def lookup(self, hpa: int) -> int:
        return self.pids[self.segment(hpa)]

    def base_of(self, pid: int) -> int:
        """HPA of the first segment mapped to `pid`."""
        if pid not in self.pids:
            raise NoFastSegment(f'NO FAST SEGMENT FOR PID {pid}', pid=pid)
        return self.base + self.pids.index(pid) * self.segsize


@dataclass(frozen=True)
class VcsSpec:
    switch: str
    host: str
    vppbs: int


@dataclass
class Topology:
    nodes: Dict[str, Node] = field(default_factory=dict)
    links: List[LinkSpec] = field(default_factory=list)
    fast: Dict[str, FastTable] = field(default_factory=dict)
    vcs: List[VcsSpec] = field(default_factory=list)

    def of_kind(self, kind: NodeKind) -> List[Node]:
        return [n for n in self.nodes.values() if n.kind is kind]

    @property
    def hosts(self) -> List[Node]:
        return self.of_kind(NodeKind.HOST)

    @property
    def switches(self) -> List[Node]:
        return self.of_kind(NodeKind.SWITCH)

    @property
    def devices(self) -> List[Node]:
        return self.of_kind(NodeKind.DEVICE)

    @property
    def graph(self) -> nx.MultiGraph:
        """Nodes carry `kind`; parallel links are separate edges keyed by link index."""
        g = nx.MultiGraph()
        for node in self.nodes.values():
            g.add_node(node.id, kind=node.kind)
        for i, link in enumerate(self.links):
            g.add_edge(link.a, link.b, key=i, link=link)
        return g

    def ports(self, switch: str) -> List[Tuple[int, str, LinkSpec]]:
        """(port, peer, link) of a switch in port order."""
        on = [link for link in self.links if switch in (link.a, link.b)]
        return [(port, link.other(switch), link) for port, link in enumerate(on)]

    def peer(self, switch: str, port: int) -> str:
        return self.ports(switch)[port][1]

    def ports_to(self, switch: str, peer: str) -> List[int]:
        return [port for port, other, _ in self.ports(switch) if other == peer]

    def pid_of(self, node_id: str) -> int:
        pid = self.nodes[node_id].pid
        assert pid is not None, ValueError(f'*** {node_id} HAS NO PID ***')
        return pid

    @property
    def pid_map(self) -> Dict[int, str]:
        return {n.pid: n.id for n in self.nodes.values() if n.pid is not None}

    @property
    def level(self) -> ProtocolLevel:
        """CXL 3.0 once a fabric feature (GFD, PBR tables, switch cascades) is used."""
        def kind(node_id: str) -> Optional[NodeKind]:
            node = self.nodes.get(node_id)
            return None if node is None else node.kind

        cascaded = any(kind(link.a) is kind(link.b) is NodeKind.SWITCH for link in self.links)
        if cascaded or self.fast or any(d.device_kind is DeviceKind.GFD for d in self.devices):
            return ProtocolLevel.CXL_3_0
        return ProtocolLevel.CXL_2_0 if self.switches else ProtocolLevel.CXL_1_1

    def summary(self) -> str:
        return (f'{len(self.hosts)} host(s), {len(self.switches)} switch(es), '
                f'{len(self.devices)} device(s), {len(self.links)} link(s), '
                f'CXL {self.level.value}')


# PARSING
# =======
_KV_RE = re.compile(r'^(?P<key>[a-z_]+)=(?P<value>\S+)$')

_WIDTHS: Tuple[int, ...] = (16, 8, 4, 2, 1)
_RATES: Tuple[int, ...] = (64, 32, 16, 8)


def _options(words: List[str], n: int) -> Tuple[Dict[str, str], List[str]]:
    kv: Dict[str, str] = {}
    flags: List[str] = []
    for word in words:
        match = _KV_RE.match(word)
        if match:
            kv[match['key']] = match['value']
        elif '=' in word:
            raise TopologyParseError(f'LINE {n}: BAD OPTION {word!r}', line=n)
        else:
            flags.append(word)
    return kv, flags


def _int(text: str, n: int, base: int = 10) -> int:
    try:
        return int(text, base)
    except ValueError as err:
        raise TopologyParseError(f'LINE {n}: NOT A NUMBER {text!r}', line=n) from err


def _required(kv: Dict[str, str], key: str, n: int) -> str:
    if key not in kv:
        raise TopologyParseError(f'LINE {n}: MISSING {key}=', line=n)
    return kv[key]


def parse_topology(text: str, validate: bool = True) -> Topology:
    """Parse a topology file; with `validate`, reject it unless `validate_topology` passes."""
    topology = Topology()
    pid_lines: List[Tuple[str, int, int]] = []

    def add(node: Node, n: int):
        if node.id in topology.nodes:
            raise TopologyParseError(f'LINE {n}: DUPLICATE ENTITY {node.id}', line=n)
        topology.nodes[node.id] = node

    for n, raw in enumerate(text.splitlines(), start=1):
        words = raw.split('#', 1)[0].split()
        if not words:
            continue
        verb, args = words[0].upper(), words[1:]

        if verb in ('HOST', 'SWITCH') and len(args) == 1:
            add(Node(id=args[0], kind=NodeKind(verb)), n)

        elif verb == 'DEVICE' and args:
            kv, flags = _options(args[1:], n)
            if flags:
                raise TopologyParseError(f'LINE {n}: UNEXPECTED {" ".join(flags)}', line=n)
            try:
                kind = DeviceKind(_required(kv, 'kind', n).upper())
            except ValueError as err:
                raise TopologyParseError(f'LINE {n}: UNKNOWN DEVICE KIND {kv["kind"]!r}',
                                         line=n) from err
            add(Node(id=args[0], kind=NodeKind.DEVICE,
                     device_type=_int(_required(kv, 'type', n), n), device_kind=kind,
                     lds=_int(kv.get('lds', '1'), n)), n)

        elif verb == 'LINK' and len(args) >= 2:
            kv, flags = _options(args[2:], n)
            if set(flags) - {'retimer'}:
                raise TopologyParseError(f'LINK OPTION(S) {flags} ON LINE {n}', line=n)
            topology.links.append(LinkSpec(a=args[0], b=args[1],
                                           width=_int(kv.get('width', '16'), n),
                                           gts=_int(kv.get('gts', '32'), n),
                                           retimer='retimer' in flags))

        elif verb == 'FAST' and len(args) == 4:
            kv, _ = _options(args[1:], n)
            segsize = _int(_required(kv, 'segsize', n), n, base=16)
            if segsize <= 0 or segsize & (segsize - 1):
                raise TopologyParseError(f'LINE {n}: FAST SEGMENT SIZE {segsize:#x} '
                                         'NOT A POWER OF TWO', line=n)
            pids = tuple(_int(p, n) for p in _required(kv, 'map', n).split(','))
            topology.fast[args[0]] = FastTable(base=_int(_required(kv, 'base', n), n, base=16),
                                               segsize=segsize, pids=pids)

        elif verb == 'VCS' and len(args) == 3:
            kv, _ = _options(args[2:], n)
            topology.vcs.append(VcsSpec(switch=args[0], host=args[1],
                                        vppbs=_int(_required(kv, 'vppbs', n), n)))

        elif verb == 'PID' and len(args) == 2:
            pid_lines.append((args[0], _int(args[1], n), n))

        else:
            raise TopologyParseError(f'LINE {n}: CANNOT PARSE {raw.strip()!r}', line=n)

    for entity, pid, n in pid_lines:
        if entity not in topology.nodes:
            raise TopologyParseError(f'LINE {n}: PID FOR UNKNOWN ENTITY {entity}', line=n)
        topology.nodes[entity].pid = pid

    _assign_pids(topology)
    _default_vcs(topology)

    if validate:
        problems = validate_topology(topology)
        if problems:
            raise TopologyParseError(f'INVALID TOPOLOGY: {"; ".join(problems)}',
                                     problems=problems)

    logger.info('topology: %s', topology.summary())
    return topology


def _assign_pids(topology: Topology):
    taken = {n.pid for n in topology.nodes.values() if n.pid is not None}
    free = (pid for pid in range(1, MAX_PIDS) if pid not in taken)
    for node in topology.nodes.values():
        if node.edge and node.pid is None:
            node.pid = next(free)


def _default_vcs(topology: Topology):
    declared = {(v.switch, v.host) for v in topology.vcs}
    g = topology.graph
    for switch in topology.switches:
        peers = [topology.nodes.get(peer) for _, peer, _ in topology.ports(switch.id)]
        lds = sum(p.lds for p in peers if p is not None and p.kind is NodeKind.DEVICE)
        if not lds:
            continue
        for host in topology.hosts:
            if (switch.id, host.id) not in declared and nx.has_path(g, switch.id, host.id):
                topology.vcs.append(VcsSpec(switch=switch.id, host=host.id, vppbs=lds))
                declared.add((switch.id, host.id))


# VALIDATION
# ==========
def validate_topology(topology: Topology) -> List[str]:   # noqa: C901
    """Every problem found: entity/link consistency, PIDs, reachability, dependence cycles."""
    problems: List[str] = []
    nodes = topology.nodes

    for device in topology.devices:
        if device.device_type not in (1, 2, 3):
            problems.append(f'{device.id}: type {device.device_type} not in 1..3')
        if not 1 <= device.lds <= MAX_LDS:
            problems.append(f'{device.id}: {device.lds} LDs (MLD holds 1..{MAX_LDS})')
        if device.lds > 1 and device.device_kind is not DeviceKind.MLD:
            problems.append(f'{device.id}: lds= only applies to MLDs')
        if device.device_kind in (DeviceKind.MLD, DeviceKind.GFD) and device.device_type != 3:
            problems.append(f'{device.id}: {device.device_kind.value} must be a Type-3 device')

    for link in topology.links:
        ends = [nodes.get(link.a), nodes.get(link.b)]
        if None in ends:
            missing = [e for e, node in zip((link.a, link.b), ends) if node is None]
            problems.append(f'LINK {link.a} {link.b}: unknown {", ".join(missing)}')
            continue
        kinds = {e.kind for e in ends}
        if len(kinds) == 1 and NodeKind.SWITCH not in kinds:
            problems.append(f'LINK {link.a} {link.b}: {ends[0].kind.value} to '
                            f'{ends[1].kind.value} links are not CXL links')
        if link.width not in _WIDTHS:
            problems.append(f'LINK {link.a} {link.b}: width x{link.width}')
        if link.gts not in _RATES:
            problems.append(f'LINK {link.a} {link.b}: {link.gts} GT/s')

    for switch, fast in topology.fast.items():
        if switch not in nodes or nodes[switch].kind is not NodeKind.SWITCH:
            problems.append(f'FAST {switch}: not a switch')
        unknown = sorted(set(fast.pids) - set(topology.pid_map))
        if unknown:
            problems.append(f'FAST {switch}: unknown PID(s) {unknown}')

    for vcs in topology.vcs:
        if vcs.switch not in nodes or vcs.host not in nodes:
            problems.append(f'VCS {vcs.switch} {vcs.host}: unknown entity')
        elif not nx.has_path(topology.graph, vcs.switch, vcs.host):
            problems.append(f'VCS {vcs.switch} {vcs.host}: host cannot reach switch')
        if vcs.vppbs < 1:
            problems.append(f'VCS {vcs.switch} {vcs.host}: no vPPBs')

    pids = [n.pid for n in nodes.values() if n.pid is not None]
    if len(pids) != len(set(pids)):
        problems.append('duplicate PIDs')
    if any(not 0 <= pid < MAX_PIDS for pid in pids):
        problems.append(f'PID outside 0..{MAX_PIDS - 1}')

    if not problems:
        g = topology.graph
        hosts = [h.id for h in topology.hosts]
        for device in topology.devices:
            if not any(nx.has_path(g, h, device.id) for h in hosts):
                problems.append(f'{device.id}: unreachable from every host')

    verdict = check_acyclic(build_dependence_graph(DependenceConfig.for_level(topology.level)))
    if not verdict.ok:
        problems.append(f'channel dependence cycle {" -> ".join(verdict.cycle)}')

    return problems
