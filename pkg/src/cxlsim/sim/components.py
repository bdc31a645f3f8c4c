"""CXLSim Simulated Components.

Hosts drive CXL.mem masters, devices wrap CXL.mem subordinates (one per
logical device of an MLD, a sharing directory on a GFD) and switches forward
with hierarchy-based routing, or port-based routing on CXL 3.0 fabrics.  The
Fabric Manager component executes timed FM commands and tells devices about
the HDM ranges hosts program on hot-add.
"""


from dataclasses import dataclass
import logging
from sys import version_info
from typing import Dict, List, Optional, Set, Tuple   # Py3.9+: use generic types

import networkx as nx

from ..errors import NoFastSegment, NoRoute, OutOfRange, UnmappedId
from ..fabric.containment import ErrorContainment, error_completion
from ..fabric.devload import DevLoadController, classify_load
from ..fabric.manager import FabricManager, FmCommand, HostEventKind
from ..fabric.pbr import EdgeDirection, EdgePort, PbrMessage, edge_translate, pbr_route
from ..fabric.switch import Fabric, logical_name, route_hbr
from ..fabric.topology import DeviceKind, Node, NodeKind, Topology
from ..mem.device import MemDevice
from ..mem.directory import Directory, DirectoryMonitor
from ..mem.host import HostMemAgent
from ..mem.region import HdmKind, HdmRegion, check_disjoint
from ..protocol.address import Address
from ..protocol.channels import Channel
from ..protocol.fields import CacheState
from ..protocol.message import Message
from ..protocol.opcodes import ProtocolLevel, S2MNDR
from ..util.config import SimConfig
from .engine import PS_PER_NS, Component, Engine, Event, EventAction
from .link import LinkPort, Transit
from .trace import TraceRecorder
from .workload import GeneratorKind, OpKind, WorkloadOp, WorkloadSpec

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'FM_COMPONENT',
    'SimContext',
    'Request',
    'NodeComponent',
    'HostNode',
    'DeviceNode',
    'SwitchNode',
    'FabricManagerNode',
    'DirectoryView',
)


logger = logging.getLogger(__name__)


FM_COMPONENT: str = 'FM'

_RESPONSE_CHANNELS = frozenset((Channel.S2M_NDR, Channel.S2M_DRS))


@dataclass
class SimContext:   # pylint: disable=too-many-instance-attributes
    """Run-wide state every component can see."""

    topology: Topology
    fabric: Fabric
    manager: FabricManager
    config: SimConfig
    trace: TraceRecorder
    monitors: Tuple[str, ...] = ()

    def __post_init__(self):
        self.hosts: Dict[str, HostNode] = {}
        self.devices: Dict[str, DeviceNode] = {}
        self.switches: Dict[str, SwitchNode] = {}
        self.pid_names: Dict[int, str] = self.topology.pid_map
        self.pbr: bool = self.topology.level is ProtocolLevel.CXL_3_0
        self.directory_monitor: DirectoryMonitor = DirectoryMonitor()

    def check_directories(self, quiescent: bool = False):
        if 'directory' not in self.monitors:
            return
        agents = {h.pid: h.agent for h in self.hosts.values()}
        for device in self.devices.values():
            for agent in device.agents.values():
                if agent.directory is not None:
                    self.directory_monitor.check(DirectoryView(agent, agents, quiescent),
                                                 prefix=self.trace.records)


@dataclass(frozen=True)
class _CacheView:
    host_id: int
    cache: Dict[int, object]


@dataclass
class DirectoryView:
    """A sharing device plus every host's cached lines of that device."""

    device: MemDevice
    agents: Dict[int, HostMemAgent]
    settled: bool = False

    def _owned(self, line: int) -> bool:
        address = Address(hpa=line)
        return any(r.contains(address) for r in self.device.regions)

    @property
    def hosts(self) -> Dict[int, _CacheView]:
        return {pid: _CacheView(host_id=pid, cache={line: entry
                                                    for line, entry in agent.cache.items()
                                                    if self._owned(line)})
                for pid, agent in self.agents.items()}

    @property
    def quiescent(self) -> bool:
        return (self.settled and all(a.idle for a in self.agents.values()) and
                not self.device.bi_pending)


class NodeComponent(Component):
    """A topology entity with one outgoing link port per link."""

    def __init__(self, node: Node, engine: Engine, ctx: SimContext):
        super().__init__(component_id=node.id, engine=engine)
        self.node: Node = node
        self.ctx: SimContext = ctx
        self.ports: Dict[int, LinkPort] = {}   # by topology link index
        self._towards: Dict[str, LinkPort] = {}

    def attach_port(self, link_index: int, port: LinkPort):
        self.ports[link_index] = port

    def port_towards(self, dest: str) -> LinkPort:
        """Port of the first hop to `dest`, never transiting another edge entity."""
        port = self._towards.get(dest)
        if port is not None:
            return port

        topology = self.ctx.topology
        switches = [s.id for s in topology.switches]
        g = self.ctx.fabric.graph.subgraph(switches + [self.id, dest])
        try:
            hop = nx.shortest_path(g, self.id, dest)[1]
        except (nx.NetworkXNoPath, nx.NodeNotFound) as err:
            raise NoRoute(f'NO PATH {self.id} -> {dest}', at=self.id, dest=dest) from err

        for index, link in enumerate(topology.links):
            if index in self.ports and link.other(self.id) == hop:
                port = self._towards[dest] = self.ports[index]
                return port
        raise NoRoute(f'{self.id} HAS NO PORT TOWARDS {hop}', at=self.id, dest=dest)

    def record(self, direction: str, msg: Message,
               transition: Optional[Tuple[CacheState, CacheState]] = None,
               flags: Sequence[str] = ()):
        self.ctx.trace.record(self.now, self.id, direction, msg, transition=transition,
                              flags=flags)


# HOSTS
# =====
@dataclass
class Request:
    msg: Message
    op: WorkloadOp
    endpoint: str
    device: str
    issued_ps: int
    before: CacheState

    @property
    def tag(self) -> int:
        return self.msg.tag


class HostNode(NodeComponent):   # pylint: disable=too-many-instance-attributes
    """CXL.mem master plus the workloads it runs."""

    def __init__(self, node: Node, engine: Engine, ctx: SimContext):
        super().__init__(node, engine, ctx)
        config = ctx.config
        self.pid: int = node.pid
        self.agent: HostMemAgent = HostMemAgent(host_id=node.pid, name=node.id,
                                                needs_cmp=self._needs_cmp)
        self.containment: ErrorContainment = ErrorContainment(
            timeout_ps=config.containment_timeout_ns * PS_PER_NS)
        self.devload: Optional[DevLoadController] = (
            DevLoadController(config.devload_params()) if config.devload_enabled else None)

        self.workloads: List[WorkloadSpec] = []
        self.cursor: Dict[int, int] = {}
        self.requests: Dict[int, Request] = {}
        self.latencies_ps: List[int] = []

        self.issued: int = 0
        self.completed: int = 0
        self.contained: int = 0
        self.poisoned: int = 0

        self._next_issue_ps: int = 0
        self._step_scheduled: bool = False
        self._listening: set = set()
        self._timers: Set[int] = set()
        # tags completed by containment whose real responses may still turn up
        self._late: Set[int] = set()

    # ADDRESSING
    # ==========
    @property
    def vh(self):
        return self.ctx.fabric.vhs[self.id]

    def _target(self, address: Address) -> Tuple[str, Optional[int], HdmRegion]:
        region = self.vh.decoders.decode(address)
        device, ld_id = self.vh.members[region.owner_device]
        return device, ld_id, region

    def _needs_cmp(self, line: int) -> bool:
        try:
            device, _, region = self._target(Address(hpa=line))
        except OutOfRange:
            return True
        return (region.kind is not HdmKind.HDM_H or
                self.ctx.topology.nodes[device].device_type == 2)

    def region_for(self, workload: WorkloadSpec) -> HdmRegion:
        try:
            return self.vh.region_of(workload.device, workload.ld)
        except KeyError as err:
            raise NoRoute(f'{logical_name(workload.device, workload.ld)} IS NOT IN THE '
                          f'VIRTUAL HIERARCHY OF {self.id}', host=self.id,
                          device=workload.device) from err

    # WORKLOADS
    # =========
    def add_workload(self, workload: WorkloadSpec):
        index = len(self.workloads)
        self.workloads.append(workload)
        self.cursor[index] = 0
        if workload.kind is GeneratorKind.SCRIPT:
            for step in workload.script:
                self.engine.at(step.at_ps, self.id, EventAction.WORKLOAD_STEP,
                               payload=(index, step.op))
        else:
            self.engine.at(workload.start_ps, self.id, EventAction.WORKLOAD_STEP)

    def _pump(self):
        """Issue fixed-mix operations while credits, the outstanding limit and DevLoad allow."""
        for index, workload in enumerate(self.workloads):
            if workload.kind is not GeneratorKind.FIXED_MIX:
                continue
            region = self.region_for(workload)
            port = self.port_towards(workload.device)
            if port.id not in self._listening:
                self._listening.add(port.id)
                port.listeners.append(self._pump)

            while workload.active(self.cursor[index], self.now):
                if len(self.requests) >= self.ctx.config.max_outstanding:
                    return
                op = workload.op(self.cursor[index])
                channel = Channel.M2S_RWD if op.kind is OpKind.WRITE else Channel.M2S_REQ
                if not port.room(channel):
                    break
                if self.devload is not None and self.now < self._next_issue_ps:
                    self._wake_at(self._next_issue_ps)
                    return
                self.cursor[index] += 1
                self.issue(op, region)

    def _wake_at(self, time_ps: int):
        if not self._step_scheduled:
            self._step_scheduled = True
            self.engine.at(time_ps, self.id, EventAction.WORKLOAD_STEP)

    def _arm(self, deadline_ps: int):
        """One containment timer per distinct deadline, never in the past."""
        if deadline_ps > self.now and deadline_ps not in self._timers:
            self._timers.add(deadline_ps)
            self.engine.at(deadline_ps, self.id, EventAction.TIMER)

    def issue(self, op: WorkloadOp, region: HdmRegion) -> Optional[Message]:
        address = op.address(region)
        before = self.agent.state(address)
        if op.kind is OpKind.STORE:
            self.agent.store(address, op.value)
            return None

        if op.kind is OpKind.WRITE:
            msg = self.agent.write(address, op.value)
        elif op.kind is OpKind.EVICT:
            msg = self.agent.evict(address)
        else:
            msg = self.agent.read(address, exclusive=op.kind is OpKind.READ_EXCL,
                                  cache=op.kind is not OpKind.READ)

        device, ld_id, _ = self._target(address)
        endpoint = logical_name(device, ld_id)
        self._late.discard(msg.tag)
        self.requests[msg.tag] = Request(msg=msg, op=op, endpoint=endpoint, device=device,
                                         issued_ps=self.now, before=before)
        self.issued += 1
        if self.devload is not None:
            rate = self.devload.state.rates.get(self.id, self.devload.params.nominal_rate)
            self._next_issue_ps = self.now + int(PS_PER_NS * 1000 / rate)

        if endpoint in self.containment.dead:
            self.record('TX', msg, flags=('dead-endpoint',))
            self._contain([(self.id, error_completion(msg))], pump=False)
            return msg

        self.containment.track(self.id, endpoint, msg, self.now)
        self._arm(self.now + self.containment.timeout_ps)
        self._send(msg, device)
        return msg

    def _send(self, msg: Message, device: Optional[str] = None):
        if device is None:
            device, _, _ = self._target(msg.address)
        self.record('TX', msg)
        self.port_towards(device).offer(Transit(msg=msg, source=self.id))

    # EVENTS
    # ======
    def handle(self, event: Event):
        if event.action is EventAction.DELIVER:
            _, transits = event.payload
            for transit in transits:
                self._receive(transit.msg)
            self.ctx.check_directories()
            self._pump()

        elif event.action is EventAction.WORKLOAD_STEP:
            if event.payload is None:
                self._step_scheduled = False
                self._pump()
            else:
                index, op = event.payload
                self.issue(op, self.region_for(self.workloads[index]))

        elif event.action is EventAction.TIMER:
            self._timers.discard(self.now)
            self._contain(self.containment.expire(self.now))
            deadline = self.containment.next_deadline()
            if deadline is not None:
                self._arm(deadline)

        else:
            raise ValueError(f'*** {self.id}: UNEXPECTED {event.action.value} ***')

    def _receive(self, msg: Message, flags: Sequence[str] = ()):
        request = self.requests.get(msg.tag) if msg.channel in _RESPONSE_CHANNELS else None
        if request is not None and request.msg.line != msg.line:
            request = None
        if request is None and msg.tag in self._late and msg.channel in _RESPONSE_CHANNELS:
            self.record('RX', msg, flags=('late',))
            return
        if request is not None and 'contained' not in flags:
            self.containment.heard_from(request.endpoint, self.now)

        out = self.agent.receive(msg)
        self.poisoned += msg.poison
        if msg.devload is not None and self.devload is not None:
            self.devload.update(self.id, msg.devload)

        transition = None
        if request is not None and self._done(request):
            transition = (request.before, self.agent.state(request.msg.address))
            self._complete(request)
        self.record('RX', msg, transition=transition, flags=flags)

        for reply in out:
            self._send(reply)

    def _done(self, request: Request) -> bool:
        if request.op.kind is OpKind.WRITE:
            return request.tag not in self.agent.acks
        pending = self.agent.pending.get(request.msg.line)
        return pending is None or pending.tag != request.tag

    def _complete(self, request: Request):
        del self.requests[request.tag]
        self.containment.complete(self.id, request.tag)
        self.latencies_ps.append(self.now - request.issued_ps)
        self.completed += 1

    # CONTAINMENT
    # ===========
    def _contain(self, expired: Sequence[Tuple[str, Message]], pump: bool = True):
        for host, completion in expired:
            assert host == self.id, ValueError(f'*** {self.id} GOT {host}\'S COMPLETION ***')
            request = self.requests.get(completion.tag)
            if request is None:
                continue
            self.contained += 1
            self._late.add(request.tag)
            self._receive(completion, flags=('contained',))
            if request.tag in self.requests:
                # reads that also wait for a completion get a poisoned Cmp
                self._receive(Message(opcode=S2MNDR.Cmp, address=completion.address,
                                      tag=completion.tag, ld_id=completion.ld_id, poison=True),
                              flags=('contained',))
        if expired and pump:
            self._pump()

    @property
    def outstanding(self) -> int:
        return len(self.requests)


# DEVICES
# =======
class DeviceNode(NodeComponent):
    """CXL.mem subordinate(s) behind one device port."""

    def __init__(self, node: Node, engine: Engine, ctx: SimContext):
        super().__init__(node, engine, ctx)
        config = ctx.config
        self.media_ps: int = config.media_latency_ns * PS_PER_NS
        self.failed: bool = False
        self.in_media: int = 0
        self.dropped: int = 0

        def device(name: str, directory: Optional[Directory] = None) -> MemDevice:
            return MemDevice(name=name, device_type=node.device_type or 3, directory=directory,
                             media_latency_ns=config.media_latency_ns)

        if node.device_kind is DeviceKind.MLD:
            self.agents: Dict[Optional[int], MemDevice] = {
                ld: device(logical_name(node.id, ld)) for ld in range(node.lds)}
        elif node.device_kind is DeviceKind.GFD:
            hosts = [h.pid for h in ctx.topology.hosts]
            self.agents = {None: device(node.id, Directory(hosts=hosts,
                                                           capacity=config.sf_capacity))}
        else:
            self.agents = {None: device(node.id)}

    def agent_for(self, ld_id: Optional[int]) -> MemDevice:
        key = ld_id if self.node.device_kind is DeviceKind.MLD else None
        if key not in self.agents:
            raise UnmappedId(f'{self.id} HAS NO LD {ld_id}', device=self.id, ld_id=ld_id)
        return self.agents[key]

    def attach(self, region: HdmRegion, ld_id: Optional[int] = None):
        agent = self.agent_for(ld_id)
        if region in agent.regions:
            return
        check_disjoint(agent.regions + [region])
        agent.regions.append(region)

    def detach(self, ld_id: Optional[int] = None):
        agent = self.agent_for(ld_id)
        owner = logical_name(self.id, ld_id)
        agent.regions = [r for r in agent.regions if r.owner_device != owner]

    def fail(self):
        self.failed = True
        logger.warning('%s failed at %d ps', self.id, self.now)

    # EVENTS
    # ======
    def handle(self, event: Event):
        if event.action is EventAction.DELIVER:
            _, transits = event.payload
            for transit in transits:
                self._receive(transit.msg)
            self.ctx.check_directories()

        elif event.action is EventAction.TIMER:
            what, responses = event.payload
            if what == 'fail':
                self.fail()
                return
            self.in_media -= 1
            if self.failed:
                self.dropped += len(responses)
                return
            for msg in responses:
                self._send(msg)

        else:
            raise ValueError(f'*** {self.id}: UNEXPECTED {event.action.value} ***')

    def _receive(self, msg: Message):
        if self.failed:
            self.dropped += 1
            return
        self.record('RX', msg)
        agent = self.agent_for(msg.ld_id)
        if self.ctx.config.devload_enabled:
            agent.devload = classify_load(self.in_media / self.ctx.config.devload_capacity,
                                          self.ctx.config.devload_params())
        responses = agent.receive(msg)
        if responses:
            self.in_media += 1
            self.engine.schedule(self.media_ps, self.id, EventAction.TIMER,
                                 payload=('media', responses))

    def _send(self, msg: Message):
        if msg.dpid is not None:
            host = self.ctx.pid_names[msg.dpid]
        else:
            host = self.ctx.fabric.owner(self.id, msg.ld_id)
            if host is None:
                raise NoRoute(f'{logical_name(self.id, msg.ld_id)} IS NOT BOUND TO ANY HOST',
                              device=self.id)
        self.record('TX', msg)
        self.port_towards(host).offer(Transit(msg=msg, source=self.id))


# SWITCHES
# ========
class SwitchNode(NodeComponent):
    """Store-and-forward switch with a fixed internal latency."""

    def __init__(self, node: Node, engine: Engine, ctx: SimContext):
        super().__init__(node, engine, ctx)
        self.model = ctx.fabric.switch(node.id)
        self.latency_ps: int = ctx.config.switch_latency_ns * PS_PER_NS
        self.forwarded: int = 0
        # egress port number -> topology link index
        self.egress: Dict[int, int] = {}
        for port, _, link in ctx.topology.ports(node.id):
            self.egress[port] = next(i for i, l in enumerate(ctx.topology.links) if l is link)

    def route(self, transit: Transit) -> Tuple[int, Message]:
        msg, source = transit.msg, transit.source
        if not self.ctx.pbr:
            return route_hbr(msg, self.model, self.ctx.fabric, source)

        topology = self.ctx.topology
        node = topology.nodes[source]
        if msg.dpid is None and node.kind is NodeKind.HOST:
            device, ld_id = self.ctx.fabric.vhs[source].target(msg)
            if ld_id is not None:
                msg = msg.evolve(ld_id=ld_id)
            try:
                pmsg = edge_translate(msg, EdgeDirection.TO_FABRIC,
                                      EdgePort(pid=node.pid, fast=topology.fast.get(self.id)))
            except (NoFastSegment, UnmappedId):
                pmsg = PbrMessage(inner=msg, dpid=topology.pid_of(device), spid=node.pid)
        else:
            dpid = msg.dpid if msg.dpid is not None else topology.pid_of(
                self.ctx.fabric.owner(source, msg.ld_id) or source)
            pmsg = PbrMessage(inner=msg, dpid=dpid,
                              spid=msg.spid if msg.spid is not None else node.pid)

        port = pbr_route(pmsg, self.model, rng=self.engine.rng)
        return port, pmsg.inner.evolve(dpid=pmsg.dpid)

    def handle(self, event: Event):
        if event.action is EventAction.DELIVER:
            _, transits = event.payload
            for transit in transits:
                port, msg = self.route(transit)
                self.engine.schedule(self.latency_ps, self.id, EventAction.TIMER,
                                     payload=(port, Transit(msg=msg, source=transit.source)))

        elif event.action is EventAction.TIMER:
            port, transit = event.payload
            self.forwarded += 1
            self.ports[self.egress[port]].offer(transit)

        else:
            raise ValueError(f'*** {self.id}: UNEXPECTED {event.action.value} ***')


# FABRIC MANAGER
# ==============
class FabricManagerNode(Component):
    """Runs FM commands at their scheduled times."""

    def __init__(self, engine: Engine, ctx: SimContext):
        super().__init__(component_id=FM_COMPONENT, engine=engine)
        self.ctx: SimContext = ctx
        self.executed: List[str] = []

    def handle(self, event: Event):
        assert event.action is EventAction.FM_COMMAND, \
            ValueError(f'*** FM: UNEXPECTED {event.action.value} ***')
        cmd: FmCommand = event.payload
        result = self.ctx.manager.execute(cmd)
        self.executed.append(str(cmd))

        for host_event in result.events:
            device = self.ctx.devices.get(host_event.device)
            if device is None:
                continue
            if host_event.kind is HostEventKind.HOT_ADD:
                device.attach(host_event.region, host_event.ld_id)
            else:
                device.detach(host_event.ld_id)
            logger.info('%d ps: %s', self.now, host_event)
