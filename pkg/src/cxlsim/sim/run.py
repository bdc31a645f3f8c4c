"""CXLSim Simulation Runs.

`run` wires a topology into components (one link port per link direction),
applies the workload file's FM commands, failures and generators, executes to
the horizon (or until nothing is left to do) and collects the statistics.
"""


from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import Dict, List, Optional   # Py3.9+: use generic types

from joblib import Parallel, delayed
import networkx as nx

from ..errors import ConfigError, Deadlock, FabricError, MonitorViolation
from ..fabric.isl import IslDirection, IslPort
from ..fabric.manager import FabricManager, FmCommand, FmCommandKind, parse_fm_script
from ..fabric.switch import Fabric, logical_name
from ..fabric.topology import DeviceKind, NodeKind, Topology, validate_topology
from ..flit.replay import ReplayBuffer
from ..mem.region import HdmKind
from ..perf.link import LinkConfig
from ..util.config import WorkloadConfig
from .components import (FM_COMPONENT, DeviceNode, FabricManagerNode, HostNode, SimContext,
                         SwitchNode)
from .engine import PS_PER_NS, Engine, EventAction
from .link import LinkPort, LinkStats, credit_pools
from .stats import SimStats, latency_summary
from .trace import TraceRecorder
from .workload import workload_from_config

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'MONITORS', 'SimResult', 'run', 'run_repeated'


logger = logging.getLogger(__name__)


MONITORS: Sequence[str] = ('directory', 'conservation')


@dataclass
class SimResult:   # pylint: disable=too-many-instance-attributes
    seed: int
    trace: TraceRecorder
    stats: SimStats
    end_ps: int = 0
    verdicts: Dict[str, str] = field(default_factory=dict)
    links: Dict[str, LinkStats] = field(default_factory=dict)
    hosts: Dict[str, HostNode] = field(default_factory=dict)
    devices: Dict[str, DeviceNode] = field(default_factory=dict)


# WIRING
# ======
def _link_ports(engine: Engine, ctx: SimContext, nodes: Dict[str, object]) -> List[LinkPort]:
    topology, config = ctx.topology, ctx.config
    flight_ps = config.flight_ns * PS_PER_NS
    ports: List[LinkPort] = []
    seen: Dict[str, int] = {}

    for index, link in enumerate(topology.links):
        cfg = LinkConfig(lanes=link.width, rate_gts=link.gts, flit_mode=config.mode,
                         sync_hdr_bypass=config.sync_hdr_bypass)
        isl = None
        if topology.nodes[link.a].kind is topology.nodes[link.b].kind is NodeKind.SWITCH:
            isl = IslPort(switch=link.a, port=index, credits=config.credits)

        for src, dst, direction in ((link.a, link.b, IslDirection.DOWNSTREAM),
                                    (link.b, link.a, IslDirection.UPSTREAM)):
            if isl is None:
                pools = credit_pools(config.credits)
            else:
                pools = {c: isl.pool(direction, c) for c in isl.channels(direction)}

            name = f'{src}->{dst}'
            seen[name] = seen.get(name, 0) + 1
            label = name if seen[name] == 1 else f'{name}#{seen[name] - 1}'
            replay = None
            if config.flit_error_rate:
                replay = ReplayBuffer(error_rate=config.flit_error_rate, rng=engine.rng)
            port = LinkPort(engine, src, dst, cfg, flight_ps=flight_ps, pools=pools, label=label,
                            replay=replay)
            nodes[src].attach_port(index, port)
            ports.append(port)
    return ports


def _attach_gfds(ctx: SimContext):
    """Every host that reaches a GFD maps it as one HDM-DB region."""
    graph = ctx.fabric.graph
    for gfd in (d for d in ctx.topology.devices if d.device_kind is DeviceKind.GFD):
        for host in ctx.topology.hosts:
            vh = ctx.fabric.vhs[host.id]
            if gfd.id not in vh.members and nx.has_path(graph, host.id, gfd.id):
                vh.attach(gfd.id, kind=HdmKind.HDM_DB)


def _auto_bind(ctx: SimContext, host: str, device: str, ld_id: Optional[int]):
    """Bind (device, LD) into the host's VCS unless the host already maps it."""
    if logical_name(device, ld_id) in ctx.fabric.vhs[host].members:
        return
    attached = ctx.fabric.attached_switch(device)
    if attached is None:
        raise ConfigError(f'{host} CANNOT REACH {logical_name(device, ld_id)}',
                          host=host, device=device)
    switch_id, port = attached
    switch = ctx.fabric.switch(switch_id)
    free = [v.index for v in switch.vppbs.values() if v.host == host and not v.bound]
    if not free:
        raise ConfigError(f'{host} HAS NO FREE vPPB AT {switch_id}', host=host, switch=switch_id)
    ctx.manager.execute(FmCommand(kind=FmCommandKind.BIND, switch=switch_id, vppb=free[0],
                                  port=port, ld_id=ld_id))


def _seed_regions(ctx: SimContext):
    for vh in ctx.fabric.vhs.values():
        for decoder in vh.decoders.decoders:
            device, ld_id = vh.members[decoder.region.owner_device]
            if device in ctx.devices:
                ctx.devices[device].attach(decoder.region, ld_id)


def _parse_command(text: str) -> FmCommand:
    commands = parse_fm_script(text)
    if len(commands) != 1:
        raise ConfigError(f'ONE FM COMMAND PER ENTRY, GOT {text!r}', command=text)
    return commands[0]


# STATISTICS
# ==========
def _collect(ctx: SimContext, engine: Engine, ports: Sequence[LinkPort],
             verdicts: Dict[str, str]) -> SimStats:
    stats = SimStats()
    end_ps = engine.now
    stats.add('sim_time', 'run', end_ps / PS_PER_NS, 'ns')
    stats.add('events', 'run', engine.executed, 'count')

    for host in ctx.hosts.values():
        stats.add('issued', host.id, host.issued, 'count')
        stats.add('completed', host.id, host.completed, 'count')
        stats.add('contained', host.id, host.contained, 'count')
        stats.add('poisoned', host.id, host.poisoned, 'count')
        for name, value in latency_summary(host.latencies_ps).items():
            stats.add(f'latency_{name}', host.id, value, 'ns')

    for device in ctx.devices.values():
        stats.add('reads', device.id, sum(a.reads for a in device.agents.values()), 'count')
        stats.add('writes', device.id, sum(a.writes for a in device.agents.values()), 'count')
        stats.add('dropped', device.id, device.dropped, 'count')

    for switch in ctx.switches.values():
        stats.add('forwarded', switch.id, switch.forwarded, 'count')

    for port in ports:
        link = port.stats
        stats.add('flits', port.id, link.flits, 'count')
        if port.replay is not None:
            stats.add('replays', port.id, link.replays, 'count')
        stats.add('data_bytes', port.id, link.data_bytes, 'B')
        stats.add('data_bw', port.id, link.gbps(end_ps), 'GB/s')
        stats.add('steady_bw', port.id, link.steady_gbps(port.flit_ps, ctx.config.steady_trim),
                  'GB/s')

    for monitor, verdict in verdicts.items():
        stats.add('monitor', monitor, verdict)
    return stats


def _conservation(ctx: SimContext, engine: Engine, drained: bool) -> str:
    """Every request got its responses or a containment completion."""
    stuck = {h.id: h.outstanding for h in ctx.hosts.values() if h.outstanding}
    for host in ctx.hosts.values():
        lost = host.issued - host.completed - host.outstanding
        if lost:
            raise MonitorViolation(f'CONSERVATION: {host.id} LOST {lost} REQUEST(S)',
                                   prefix=ctx.trace.records, host=host.id)
    if drained and stuck:
        raise Deadlock(f'NO EVENTS LEFT AT {engine.now} ps WITH REQUESTS OUTSTANDING {stuck}',
                       outstanding=stuck)
    return 'pass'


# RUNS
# ====
def run(topology: Topology, workloads: Optional[WorkloadConfig] = None,
        monitors: Optional[Sequence[str]] = None, seed: int = 0,
        horizon_ps: Optional[int] = None) -> SimResult:
    """One simulation instance; `monitors` overrides the workload file's list."""
    workloads = workloads or WorkloadConfig()
    monitors = tuple(workloads.monitors if monitors is None else monitors)
    unknown = set(monitors) - set(MONITORS)
    if unknown:
        raise ConfigError(f'UNKNOWN MONITOR(S) {sorted(unknown)}', monitors=sorted(unknown))

    problems = validate_topology(topology)
    if problems:
        raise FabricError(f'INVALID TOPOLOGY: {"; ".join(problems)}', problems=problems)

    engine = Engine(seed=seed)
    fabric = Fabric(topology)
    ctx = SimContext(topology=topology, fabric=fabric, manager=FabricManager(fabric),
                     config=workloads.sim, trace=TraceRecorder(seed=seed), monitors=monitors)
    logger.info('simulating %s (seed %d)', topology.summary(), seed)

    nodes: Dict[str, object] = {}
    for node in topology.nodes.values():
        if node.kind is NodeKind.HOST:
            nodes[node.id] = ctx.hosts[node.id] = HostNode(node, engine, ctx)
        elif node.kind is NodeKind.DEVICE:
            nodes[node.id] = ctx.devices[node.id] = DeviceNode(node, engine, ctx)
        else:
            nodes[node.id] = ctx.switches[node.id] = SwitchNode(node, engine, ctx)
    FabricManagerNode(engine, ctx)
    ports = _link_ports(engine, ctx, nodes)

    _attach_gfds(ctx)
    timed = [(c.at_ns, _parse_command(c.command)) for c in workloads.fm]
    # an FM script that binds takes over every binding decision
    scripted_binds = any(c.kind is FmCommandKind.BIND for _, c in timed)
    for entry in workloads.workloads:
        if entry.host not in ctx.hosts or entry.device not in ctx.devices:
            raise ConfigError(f'WORKLOAD {entry.host} -> {entry.device}: UNKNOWN ENTITY',
                              host=entry.host, device=entry.device)
        if not scripted_binds:
            _auto_bind(ctx, entry.host, entry.device, entry.ld)
    _seed_regions(ctx)

    for at_ns, cmd in sorted(timed, key=lambda t: t[0]):
        engine.at(at_ns * PS_PER_NS, FM_COMPONENT, EventAction.FM_COMMAND, payload=cmd)
    if workloads.fail is not None:
        if workloads.fail.device not in ctx.devices:
            raise ConfigError(f'CANNOT FAIL UNKNOWN DEVICE {workloads.fail.device}',
                              device=workloads.fail.device)
        engine.at(workloads.fail.at_ns * PS_PER_NS, workloads.fail.device, EventAction.TIMER,
                  payload=('fail', None))

    for index, entry in enumerate(workloads.workloads):
        device = topology.nodes[entry.device]
        spec = workload_from_config(entry, device_type=device.device_type or 3,
                                    seed=seed + index)
        ctx.hosts[entry.host].add_workload(spec)

    end_ps = engine.run(horizon_ps)
    drained = engine.idle

    verdicts: Dict[str, str] = {}
    if 'directory' in monitors:
        ctx.check_directories(quiescent=drained)
        verdicts['directory'] = 'pass'
    if 'conservation' in monitors:
        verdicts['conservation'] = _conservation(ctx, engine, drained)

    result = SimResult(seed=seed, trace=ctx.trace, stats=_collect(ctx, engine, ports, verdicts),
                       end_ps=end_ps, verdicts=verdicts, links={p.id: p.stats for p in ports},
                       hosts=ctx.hosts, devices=ctx.devices)
    logger.info('run finished at %d ps: %d trace record(s)', end_ps, len(ctx.trace))
    return result


def run_repeated(topology: Topology, workloads: Optional[WorkloadConfig] = None,
                 monitors: Optional[Sequence[str]] = None, seed: int = 0,
                 horizon_ps: Optional[int] = None, repeat: int = 1,
                 n_jobs: int = 1) -> List[SimResult]:
    """`repeat` independent instances seeded seed, seed+1, ...; no state is shared."""
    assert repeat >= 1, ValueError(f'*** REPEAT {repeat} ***')
    return Parallel(n_jobs=n_jobs)(
        delayed(run)(topology, workloads, monitors=monitors, seed=seed + i,
                     horizon_ps=horizon_ps)
        for i in range(repeat))
