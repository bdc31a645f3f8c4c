"""CXLSim Fabric Manager.

FM command script lines (`#` starts a comment)::

    BIND <switch> <vppb> <port> [ld]
    UNBIND <switch> <vppb> WAIT|HOT_REMOVE_WAIT|FORCE
    SETLD <device> <granularity_mb> <first-last,...> [via=<switch>]
    QUERY <entity>
    <CCI command name> [args...]
"""


from dataclasses import dataclass, field
from enum import Enum
import logging
from sys import version_info
from typing import Any, Dict, List, Optional, Set, Tuple   # Py3.9+: use generic types

from ..errors import ConfigError, FabricError, HostUncooperative, UnknownEntity
from ..mem.region import MB, HdmRegion
from ..protocol.address import MAX_LDS
from .pbr import RoutingTables, build_routing_tables
from .switch import Fabric, logical_name
from .topology import DeviceKind, NodeKind

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'CCI_STUB_COMMANDS',
    'FmCommandKind',
    'UnbindOption',
    'FmCommand',
    'HostEventKind',
    'HostEvent',
    'FmResult',
    'FabricManager',
    'fm_execute',
    'parse_fm_script',
)


logger = logging.getLogger(__name__)


# the CCI commands besides bind / unbind / Set-LD, answered with capability descriptors
CCI_STUB_COMMANDS: Tuple[str, ...] = (
    'IdentifySwitchDevice',
    'GetPhysicalPortState',
    'PhysicalPortControl',
    'SendPpbCxlIoConfigRequest',
    'GetVirtualCxlSwitchInfo',
    'GenerateAerEvent',
    'TunnelManagementCommand',
    'SendLdCxlIoConfigRequest',
    'SendLdCxlIoMemoryRequest',
    'GetLdInfo',
    'GetLdAllocations',
    'GetQosControl',
    'SetQosControl',
    'GetQosStatus',
    'GetQosAllocatedBw',
    'SetQosAllocatedBw',
    'GetQosBwLimit',
    'SetQosBwLimit',
    'GetMultiHeadedInfo',
)


class FmCommandKind(Enum):
    BIND = 'BIND'
    UNBIND = 'UNBIND'
    SET_LD = 'SETLD'
    QUERY = 'QUERY'
    STUB = 'STUB'


class UnbindOption(Enum):
    WAIT = 'WAIT'
    HOT_REMOVE_WAIT = 'HOT_REMOVE_WAIT'
    FORCE = 'FORCE'


@dataclass(frozen=True)
class FmCommand:   # pylint: disable=too-many-instance-attributes
    kind: FmCommandKind
    switch: Optional[str] = None
    vppb: Optional[int] = None
    port: Optional[int] = None
    ld_id: Optional[int] = None
    option: UnbindOption = UnbindOption.WAIT
    device: Optional[str] = None
    granularity_mb: int = 256
    ranges: Tuple[Tuple[int, int], ...] = ()
    via: Optional[str] = None
    name: Optional[str] = None   # QUERY target or CCI stub name
    args: Tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind is FmCommandKind.BIND:
            ld = '' if self.ld_id is None else f' {self.ld_id}'
            return f'BIND {self.switch} {self.vppb} {self.port}{ld}'
        if self.kind is FmCommandKind.UNBIND:
            return f'UNBIND {self.switch} {self.vppb} {self.option.value}'
        if self.kind is FmCommandKind.SET_LD:
            ranges = ','.join(f'{a}-{b}' for a, b in self.ranges)
            via = '' if self.via is None else f' via={self.via}'
            return f'SETLD {self.device} {self.granularity_mb} {ranges}{via}'
        return ' '.join((self.name or self.kind.value,) + self.args) \
            if self.kind is FmCommandKind.STUB else f'QUERY {self.name}'


class HostEventKind(Enum):
    HOT_ADD = 'hot-add'
    HOT_REMOVE = 'hot-remove'
    SURPRISE_REMOVE = 'surprise-remove'


@dataclass(frozen=True)
class HostEvent:
    host: str
    kind: HostEventKind
    device: str
    ld_id: Optional[int] = None
    region: Optional[HdmRegion] = None

    def __str__(self) -> str:
        where = '' if self.region is None else f' {self.region}'
        return f'{self.host}: {self.kind.value} {logical_name(self.device, self.ld_id)}{where}'


@dataclass
class FmResult:
    command: FmCommand
    events: List[HostEvent] = field(default_factory=list)
    reply: Dict[str, Any] = field(default_factory=dict)


class FabricManager:
    """Executes CCI commands against a fabric and keeps PBR tables distributed."""

    def __init__(self, fabric: Fabric):
        self.fabric: Fabric = fabric
        self.unresponsive: Set[str] = set()
        self.failed_links: Set[Tuple[str, str]] = set()
        self.log: List[str] = []
        self.distribute_routing()

    # routing
    def distribute_routing(self) -> RoutingTables:
        tables = build_routing_tables(self.fabric.topology, failed=self.failed_links)
        for switch_id, table in tables.items():
            self.fabric.switches[switch_id].routing = table
        return tables

    def fail_link(self, a: str, b: str) -> RoutingTables:
        """Take a link out of service and push recomputed tables to every switch."""
        if not any({link.a, link.b} == {a, b} for link in self.fabric.topology.links):
            raise UnknownEntity(f'NO LINK {a} <-> {b}', a=a, b=b)
        self.failed_links.add((a, b))
        logger.warning('link %s <-> %s failed; redistributing routing tables', a, b)
        self.log.append(f'link {a} <-> {b} failed')
        return self.distribute_routing()

    # commands
    def execute(self, cmd: FmCommand) -> FmResult:
        handler = {FmCommandKind.BIND: self._bind,
                   FmCommandKind.UNBIND: self._unbind,
                   FmCommandKind.SET_LD: self._set_ld,
                   FmCommandKind.QUERY: self._query,
                   FmCommandKind.STUB: self._stub}[cmd.kind]
        result = handler(cmd)
        self.log.append(str(cmd))
        for event in result.events:
            logger.info('FM %s -> %s', cmd, event)
        return result

    def _bind(self, cmd: FmCommand) -> FmResult:
        switch = self.fabric.switch(cmd.switch)
        vppb = switch.bind(cmd.vppb, cmd.port, cmd.ld_id)
        device = switch.device_at(cmd.port).id
        region = self.fabric.vhs[vppb.host].attach(device, cmd.ld_id,
                                                   size=self.fabric.size_of(device, cmd.ld_id))
        return FmResult(command=cmd, events=[HostEvent(host=vppb.host, kind=HostEventKind.HOT_ADD,
                                                       device=device, ld_id=cmd.ld_id,
                                                       region=region)])

    def _unbind(self, cmd: FmCommand) -> FmResult:
        switch = self.fabric.switch(cmd.switch)
        vppb = switch.vppb(cmd.vppb)
        if vppb.bound and vppb.host in self.unresponsive and cmd.option is not UnbindOption.FORCE:
            raise HostUncooperative(f'{vppb.host} DID NOT RELEASE vPPB {cmd.vppb} '
                                    f'({cmd.option.value})', host=vppb.host, vppb=cmd.vppb)

        previous = switch.unbind(cmd.vppb)
        device = switch.device_at(previous.port).id
        self.fabric.vhs[previous.host].detach(device, previous.ld_id)
        kind = HostEventKind.SURPRISE_REMOVE if cmd.option is UnbindOption.FORCE \
            else HostEventKind.HOT_REMOVE
        return FmResult(command=cmd, events=[HostEvent(host=previous.host, kind=kind,
                                                       device=device, ld_id=previous.ld_id)])

    def _set_ld(self, cmd: FmCommand) -> FmResult:
        node = self.fabric.topology.nodes.get(cmd.device)
        if node is None or node.device_kind is not DeviceKind.MLD:
            raise UnknownEntity(f'{cmd.device} IS NOT AN MLD', device=cmd.device)
        if cmd.via is not None:
            self.fabric.switch(cmd.via)
            if self.fabric.attached_switch(cmd.device) is None or \
                    self.fabric.attached_switch(cmd.device)[0] != cmd.via:
                raise UnknownEntity(f'{cmd.device} IS NOT BEHIND {cmd.via}', device=cmd.device,
                                    via=cmd.via)
        if not 1 <= len(cmd.ranges) <= min(node.lds, MAX_LDS):
            raise FabricError(f'{len(cmd.ranges)} LD RANGES FOR {cmd.device} '
                              f'({node.lds} LDs)', device=cmd.device)

        granules = [g for first, last in cmd.ranges for g in range(first, last + 1)]
        if any(last < first for first, last in cmd.ranges) or len(granules) != len(set(granules)):
            raise FabricError(f'OVERLAPPING OR EMPTY LD RANGES {cmd.ranges}', device=cmd.device)

        sizes = [(last - first + 1) * cmd.granularity_mb * MB for first, last in cmd.ranges]
        self.fabric.ld_sizes[cmd.device] = sizes + self.fabric.ld_sizes[cmd.device][len(sizes):]
        reply = {'device': cmd.device, 'lds': len(sizes),
                 'ld_sizes_mb': [s // MB for s in sizes], 'via': cmd.via}
        logger.info('%s partitioned into %d LD(s) of %s MB%s', cmd.device, len(sizes),
                    reply['ld_sizes_mb'], '' if cmd.via is None else f' (tunneled via {cmd.via})')
        return FmResult(command=cmd, reply=reply)

    def _query(self, cmd: FmCommand) -> FmResult:
        fabric, name = self.fabric, cmd.name
        if name in fabric.switches:
            reply: Dict[str, Any] = {'switch': name, 'vppbs': fabric.switches[name].snapshot(),
                                     'routes': dict(sorted(fabric.switches[name].routing.items()))}
        elif name in fabric.vhs:
            vh = fabric.vhs[name]
            reply = {'host': name, 'members': sorted(vh.members),
                     'regions': [str(d.region) for d in vh.decoders.decoders]}
        elif name in fabric.topology.nodes and \
                fabric.topology.nodes[name].kind is NodeKind.DEVICE:
            node = fabric.topology.nodes[name]
            lds = range(node.lds) if node.device_kind is DeviceKind.MLD else [None]
            reply = {'device': name, 'kind': node.device_kind.value, 'pid': node.pid,
                     'owners': {logical_name(name, ld): fabric.owner(name, ld) for ld in lds}}
        else:
            raise UnknownEntity(f'NO ENTITY {name}', entity=name)
        return FmResult(command=cmd, reply=reply)

    def _stub(self, cmd: FmCommand) -> FmResult:
        if cmd.name not in CCI_STUB_COMMANDS:
            raise UnknownEntity(f'UNKNOWN CCI COMMAND {cmd.name}', command=cmd.name)
        return FmResult(command=cmd, reply={'command': cmd.name, 'supported': True,
                                            'args': list(cmd.args)})


def fm_execute(cmd: FmCommand, manager: FabricManager) -> FmResult:
    return manager.execute(cmd)


def _int(word: str, n: int) -> int:
    try:
        return int(word)
    except ValueError as err:
        raise ConfigError(f'FM SCRIPT LINE {n}: NOT A NUMBER {word!r}', line=n) from err


def _ranges(text: str, n: int) -> Tuple[Tuple[int, int], ...]:
    out = []
    for part in text.split(','):
        first, _, last = part.partition('-')
        out.append((_int(first, n), _int(last or first, n)))
    return tuple(out)


def parse_fm_script(text: str) -> List[FmCommand]:
    commands: List[FmCommand] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        words = raw.split('#', 1)[0].split()
        if not words:
            continue
        verb, args = words[0], words[1:]

        if verb.upper() == 'BIND' and len(args) in (3, 4):
            commands.append(FmCommand(kind=FmCommandKind.BIND, switch=args[0],
                                      vppb=_int(args[1], n), port=_int(args[2], n),
                                      ld_id=_int(args[3], n) if len(args) == 4 else None))

        elif verb.upper() == 'UNBIND' and len(args) == 3:
            try:
                option = UnbindOption(args[2].upper())
            except ValueError as err:
                raise ConfigError(f'FM SCRIPT LINE {n}: UNKNOWN UNBIND OPTION {args[2]!r}',
                                  line=n) from err
            commands.append(FmCommand(kind=FmCommandKind.UNBIND, switch=args[0],
                                      vppb=_int(args[1], n), option=option))

        elif verb.upper() == 'SETLD' and len(args) in (3, 4):
            via = None
            if len(args) == 4:
                if not args[3].startswith('via='):
                    raise ConfigError(f'FM SCRIPT LINE {n}: EXPECTED via=<switch>', line=n)
                via = args[3][len('via='):]
            commands.append(FmCommand(kind=FmCommandKind.SET_LD, device=args[0],
                                      granularity_mb=_int(args[1], n),
                                      ranges=_ranges(args[2], n), via=via))

        elif verb.upper() == 'QUERY' and len(args) == 1:
            commands.append(FmCommand(kind=FmCommandKind.QUERY, name=args[0]))

        elif verb in CCI_STUB_COMMANDS:
            commands.append(FmCommand(kind=FmCommandKind.STUB, name=verb, args=tuple(args)))

        else:
            raise ConfigError(f'FM SCRIPT LINE {n}: CANNOT PARSE {raw.strip()!r}', line=n)

    return commands
