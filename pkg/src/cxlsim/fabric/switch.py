"""CXLSim Switches & Virtual Hierarchies.

Each switch splits into one virtual CXL switch (VCS) per host it serves; a VCS
owns vPPBs that the Fabric Manager binds to physical downstream ports (one vPPB
per LD on an MLD port).  A host's virtual hierarchy is the set of (logical)
devices bound into its VCSs or linked to it directly, each given an HDM range by
the host's decoders at hot-add.
"""


from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import Dict, List, Optional, Tuple   # Py3.9+: use generic types

import networkx as nx

from ..errors import NoRoute, OutOfRange, PortAlreadyBound, UnknownEntity
from ..mem.region import DECODER_GRANULE, MB, DeviceAttr, HdmKind, HdmRegion, HostDecoderSet
from ..protocol.message import Message
from .topology import DeviceKind, Node, NodeKind, Topology

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'logical_name',
    'Vppb',
    'SwitchModel',
    'VirtualHierarchy',
    'Fabric',
    'route_hbr',
)


logger = logging.getLogger(__name__)


def logical_name(device: str, ld_id: Optional[int] = None) -> str:
    return device if ld_id is None else f'{device}.LD{ld_id}'


@dataclass
class Vppb:
    index: int
    host: str
    port: Optional[int] = None
    ld_id: Optional[int] = None

    @property
    def bound(self) -> bool:
        return self.port is not None


class SwitchModel:
    """vPPB bindings, PBR routing table and edge tables of one switch."""

    def __init__(self, switch_id: str, topology: Topology):
        self.id: str = switch_id
        self.topology: Topology = topology

        self.vppbs: Dict[int, Vppb] = {}
        for vcs in (v for v in topology.vcs if v.switch == switch_id):
            for _ in range(vcs.vppbs):
                self.vppbs[len(self.vppbs)] = Vppb(index=len(self.vppbs), host=vcs.host)

        # DPID -> egress ports, filled by the Fabric Manager
        self.routing: Dict[int, Tuple[int, ...]] = {}
        self.fast = topology.fast.get(switch_id)

    def vppb(self, index: int) -> Vppb:
        if index not in self.vppbs:
            raise UnknownEntity(f'{self.id} HAS NO vPPB {index}', switch=self.id, vppb=index)
        return self.vppbs[index]

    def device_at(self, port: int) -> Node:
        ports = self.topology.ports(self.id)
        if not 0 <= port < len(ports):
            raise UnknownEntity(f'{self.id} HAS NO PORT {port}', switch=self.id, port=port)
        node = self.topology.nodes[ports[port][1]]
        if node.kind is not NodeKind.DEVICE:
            raise UnknownEntity(f'{self.id} PORT {port} LEADS TO {node.kind.value} {node.id}, '
                                'NOT A DEVICE', switch=self.id, port=port)
        return node

    def bindings(self, port: int) -> List[Vppb]:
        return [v for v in self.vppbs.values() if v.port == port]

    def bind(self, index: int, port: int, ld_id: Optional[int] = None) -> Vppb:
        vppb = self.vppb(index)
        device = self.device_at(port)

        if device.device_kind is DeviceKind.MLD:
            if ld_id is None or not 0 <= ld_id < device.lds:
                raise UnknownEntity(f'MLD {device.id} HAS NO LD {ld_id}',
                                    device=device.id, ld_id=ld_id)
            clash = [v for v in self.bindings(port) if v.ld_id == ld_id]
        else:
            if ld_id is not None:
                raise UnknownEntity(f'{device.id} IS NOT AN MLD (LD {ld_id} GIVEN)',
                                    device=device.id, ld_id=ld_id)
            clash = self.bindings(port)

        if vppb.bound or clash:
            raise PortAlreadyBound(f'{self.id} vPPB {index} / PORT {port} ALREADY BOUND',
                                   switch=self.id, vppb=index, port=port)

        vppb.port, vppb.ld_id = port, ld_id
        logger.info('%s: vPPB %d (%s) bound to port %d (%s)',
                    self.id, index, vppb.host, port, logical_name(device.id, ld_id))
        return vppb

    def unbind(self, index: int) -> Vppb:
        vppb = self.vppb(index)
        if not vppb.bound:
            raise UnknownEntity(f'{self.id} vPPB {index} IS NOT BOUND', switch=self.id, vppb=index)
        previous = Vppb(index=index, host=vppb.host, port=vppb.port, ld_id=vppb.ld_id)
        vppb.port = vppb.ld_id = None
        logger.info('%s: vPPB %d (%s) unbound', self.id, index, vppb.host)
        return previous

    def owner(self, port: int, ld_id: Optional[int] = None) -> Optional[str]:
        """Host whose VCS has (port, LD) bound."""
        for vppb in self.bindings(port):
            if vppb.ld_id == ld_id:
                return vppb.host
        return None

    def snapshot(self) -> Dict[int, Tuple[str, Optional[int], Optional[int]]]:
        return {i: (v.host, v.port, v.ld_id) for i, v in sorted(self.vppbs.items())}


@dataclass
class VirtualHierarchy:
    host: str
    decoders: HostDecoderSet = field(default_factory=HostDecoderSet)
    members: Dict[str, Tuple[str, Optional[int]]] = field(default_factory=dict)

    def attach(self, device: str, ld_id: Optional[int] = None,
               size: int = DECODER_GRANULE, kind: HdmKind = HdmKind.HDM_H) -> HdmRegion:
        name = logical_name(device, ld_id)
        self.members[name] = (device, ld_id)
        return self.decoders.program(DeviceAttr(device=name, latency_ns=0, bandwidth_gbs=0,
                                                size_mb=size // MB), kind=kind)

    def detach(self, device: str, ld_id: Optional[int] = None) -> List[HdmRegion]:
        name = logical_name(device, ld_id)
        self.members.pop(name, None)
        return self.decoders.remove(name)

    def target(self, msg: Message) -> Tuple[str, Optional[int]]:
        """(device, LD) an address-routed request of this host goes to."""
        if msg.address is None:
            raise NoRoute(f'{self.host}: {msg.opcode.value} CARRIES NO ADDRESS', host=self.host)
        try:
            region = self.decoders.decode(msg.address)
        except OutOfRange as err:
            raise NoRoute(f'{self.host}: {msg.address} OUTSIDE ITS VIRTUAL HIERARCHY',
                          host=self.host, address=msg.address) from err
        return self.members[region.owner_device]

    def region_of(self, device: str, ld_id: Optional[int] = None) -> HdmRegion:
        return self.decoders.by_device()[logical_name(device, ld_id)][0]


class Fabric:
    """Topology plus the mutable binding state the Fabric Manager acts on."""

    def __init__(self, topology: Topology):
        self.topology: Topology = topology
        self.graph: nx.MultiGraph = topology.graph
        self.switches: Dict[str, SwitchModel] = {s.id: SwitchModel(s.id, topology)
                                                 for s in topology.switches}
        self.vhs: Dict[str, VirtualHierarchy] = {h.id: VirtualHierarchy(host=h.id)
                                                 for h in topology.hosts}
        # per MLD: LD sizes in bytes (SET_LD); other devices export one granule
        self.ld_sizes: Dict[str, List[int]] = {
            d.id: [DECODER_GRANULE] * d.lds for d in topology.devices
            if d.device_kind is DeviceKind.MLD}

        for link in topology.links:
            a, b = topology.nodes[link.a], topology.nodes[link.b]
            for host, device in ((a, b), (b, a)):
                if host.kind is NodeKind.HOST and device.kind is NodeKind.DEVICE:
                    self.vhs[host.id].attach(device.id)

    def size_of(self, device: str, ld_id: Optional[int] = None) -> int:
        sizes = self.ld_sizes.get(device)
        return DECODER_GRANULE if sizes is None or ld_id is None else sizes[ld_id]

    def switch(self, switch_id: str) -> SwitchModel:
        if switch_id not in self.switches:
            raise UnknownEntity(f'NO SWITCH {switch_id}', switch=switch_id)
        return self.switches[switch_id]

    def owner(self, device: str, ld_id: Optional[int] = None) -> Optional[str]:
        """Host whose virtual hierarchy holds (device, LD)."""
        name = logical_name(device, ld_id)
        for host, vh in self.vhs.items():
            if name in vh.members:
                return host
        return None

    def attached_switch(self, device: str) -> Optional[Tuple[str, int]]:
        """(switch, port) a device hangs off, if any."""
        for switch in self.switches.values():
            for port, peer, _ in self.topology.ports(switch.id):
                if peer == device:
                    return switch.id, port
        return None

    def next_hop_port(self, at: str, dest: str) -> int:
        try:
            path = nx.shortest_path(self.graph, at, dest)
        except (nx.NetworkXNoPath, nx.NodeNotFound) as err:
            raise NoRoute(f'NO PATH {at} -> {dest}', at=at, dest=dest) from err
        return self.topology.ports_to(at, path[1])[0]


def route_hbr(msg: Message, switch: SwitchModel, fabric: Fabric,
              source: str) -> Tuple[int, Message]:
    """Egress port (and the message as forwarded) under hierarchical routing.

    Requests from a host are address-decoded against that host's virtual
    hierarchy; traffic from a device goes to the host it is bound to.  MLD-bound
    requests get the LD-ID of the ingress host's binding stamped at the switch
    owning the MLD port.
    """
    node = fabric.topology.nodes.get(source)
    if node is None:
        raise UnknownEntity(f'NO ENTITY {source}', entity=source)

    if node.kind is NodeKind.HOST:
        device, ld_id = fabric.vhs[source].target(msg)
        port = fabric.next_hop_port(switch.id, device)
        if fabric.topology.peer(switch.id, port) == device:
            if switch.owner(port, ld_id) != source:
                raise NoRoute(f'{logical_name(device, ld_id)} NOT BOUND TO {source} AT {switch.id}',
                              host=source, device=device)
            if ld_id is not None:
                msg = msg.evolve(ld_id=ld_id)
        return port, msg

    host = fabric.owner(source, msg.ld_id)
    if host is None:
        raise NoRoute(f'{logical_name(source, msg.ld_id)} IS NOT BOUND TO ANY HOST',
                      device=source, ld_id=msg.ld_id)
    return fabric.next_hop_port(switch.id, host), msg
