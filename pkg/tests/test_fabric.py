"""Fabric: topologies, virtual hierarchies, the Fabric Manager, PBR, DevLoad & containment."""


from numpy.random import default_rng
import pytest

from cxlsim.errors import (FabricError, HostUncooperative, NoFastSegment, NoRoute,
                           PortAlreadyBound, TopologyParseError, UnknownEntity, UnmappedId)
from cxlsim.fabric import (DevLoadController, DevLoadState, EdgeDirection, EdgePort,
                           ErrorContainment, Fabric, FabricManager, FmCommandKind, HostEventKind,
                           IslDirection, IslPort, PbrMessage, build_routing_tables,
                           classify_load, devload_update, edge_translate, flow_key,
                           parse_fm_script, parse_topology, pbr_route, route_hbr, routing_gaps,
                           validate_topology)
from cxlsim.mem.region import CXL_WINDOW_BASE, DECODER_GRANULE
from cxlsim.protocol import (Address, Channel, DevLoad, H2DReq, IoOpcode, M2SReq, ProtocolLevel,
                             S2MDRS, S2MNDR)
from cxlsim.protocol.message import Message


SEGMENT = 0x10000000

# two switches joined by a pair of parallel ISLs
PARALLEL_ISLS = '''
HOST H0
HOST H1
SWITCH S0
SWITCH S1
DEVICE D0 kind=SLD type=3
LINK H0 S0
LINK S0 S1
LINK S0 S1
LINK S1 D0
LINK H1 S1
'''

# S0 reaches S1 directly or the long way round through S2
TRIANGLE = '''
HOST H0
SWITCH S0
SWITCH S1
SWITCH S2
DEVICE D0 kind=SLD type=3
LINK H0 S0
LINK S0 S1
LINK S0 S2
LINK S2 S1
LINK S1 D0
'''


def _rd(hpa: int, **kwargs) -> Message:
    return Message(opcode=M2SReq.MemRd, address=Address(hpa=hpa), **kwargs)


@pytest.fixture
def pooled(switch_topology, data_dir):
    """The switch topology after running the shipped FM script."""
    manager = FabricManager(Fabric(switch_topology))
    results = [manager.execute(cmd) for cmd in
               parse_fm_script((data_dir / 'switch.fm').read_text(encoding='utf-8'))]
    return manager, results


# TOPOLOGIES
# ==========
def test_shipped_topology_levels(sld_direct, switch_topology, cxl3_fabric):
    assert sld_direct.level is ProtocolLevel.CXL_1_1
    assert switch_topology.level is ProtocolLevel.CXL_2_0
    assert cxl3_fabric.level is ProtocolLevel.CXL_3_0
    assert cxl3_fabric.summary() == '4 host(s), 2 switch(es), 2 device(s), 7 link(s), CXL 3.0'


def test_ports_and_pids(switch_topology):
    assert [peer for _, peer, _ in switch_topology.ports('S0')] == ['H0', 'H1', 'D0', 'D1', 'M0']
    assert switch_topology.pid_map == {1: 'H0', 2: 'H1', 3: 'D0', 4: 'D1', 5: 'M0'}
    assert [(v.host, v.vppbs) for v in switch_topology.vcs] == [('H0', 3), ('H1', 3)]


def test_default_vcs_covers_every_ld():
    topology = parse_topology(PARALLEL_ISLS)
    assert {(v.switch, v.host, v.vppbs) for v in topology.vcs} == {('S1', 'H0', 1),
                                                                    ('S1', 'H1', 1)}


def test_fast_table(cxl3_fabric):
    fast = cxl3_fabric.fast['S0']
    assert fast.base == CXL_WINDOW_BASE
    assert fast.lookup(CXL_WINDOW_BASE) == 10
    assert fast.lookup(CXL_WINDOW_BASE + SEGMENT + 64) == 11
    assert fast.base_of(11) == CXL_WINDOW_BASE + SEGMENT
    with pytest.raises(NoFastSegment):
        fast.lookup(CXL_WINDOW_BASE + 2 * SEGMENT)
    with pytest.raises(NoFastSegment):
        fast.base_of(3)


@pytest.mark.parametrize('text', [
    'HOST H0\nHOST H0',
    'DEVICE D0 kind=SLD type=3 speed',
    'DEVICE D0 kind=XYZ type=3',
    'DEVICE D0 kind=SLD',
    'LINK H0 D0 width=x16',
    'SWITCH S0\nFAST S0 base=0 segsize=3000 map=1',
    'PID Z0 4',
    'ROUTER R0',
])
def test_parse_errors(text):
    with pytest.raises(TopologyParseError):
        parse_topology(text)


def test_validation_problems():
    text = ('HOST H0\nHOST H1\nDEVICE M0 kind=MLD type=2 lds=2\nDEVICE D9 kind=SLD type=3\n'
            'LINK H0 M0 width=3\nLINK H0 H1')
    problems = validate_topology(parse_topology(text, validate=False))
    assert 'M0: MLD must be a Type-3 device' in problems
    assert 'LINK H0 M0: width x3' in problems
    assert 'LINK H0 H1: HOST to HOST links are not CXL links' in problems
    with pytest.raises(TopologyParseError):
        parse_topology(text)


def test_unreachable_device():
    problems = validate_topology(parse_topology('HOST H0\nDEVICE D0 kind=SLD type=3',
                                                validate=False))
    assert problems == ['D0: unreachable from every host']


# VIRTUAL HIERARCHIES & THE FABRIC MANAGER
# ========================================
def test_direct_device_joins_the_host_hierarchy(sld_direct):
    region = Fabric(sld_direct).vhs['H0'].region_of('D0')
    assert (region.base, region.size) == (CXL_WINDOW_BASE, DECODER_GRANULE)


def test_fm_script_pools_the_mld(pooled):
    manager, results = pooled
    assert [r.command.kind for r in results] == [FmCommandKind.SET_LD] + \
        [FmCommandKind.BIND] * 4 + [FmCommandKind.QUERY]
    assert results[0].reply['ld_sizes_mb'] == [256, 256]

    hot_adds = [e for r in results for e in r.events]
    assert [str(e).split('[')[0] for e in hot_adds] == [
        'H0: hot-add M0.LD0 HDM-H', 'H1: hot-add M0.LD1 HDM-H',
        'H0: hot-add D0 HDM-H', 'H1: hot-add D1 HDM-H']
    assert all(e.kind is HostEventKind.HOT_ADD for e in hot_adds)

    assert results[-1].reply['vppbs'] == {0: ('H0', 4, 0), 1: ('H0', 2, None),
                                          2: ('H0', None, None), 3: ('H1', 4, 1),
                                          4: ('H1', 3, None), 5: ('H1', None, None)}
    assert results[-1].reply['routes'] == {1: (0,), 2: (1,), 3: (2,), 4: (3,), 5: (4,)}

    vh = manager.fabric.vhs['H0']
    assert vh.region_of('M0', 0).base == CXL_WINDOW_BASE
    assert vh.region_of('D0').base == CXL_WINDOW_BASE + DECODER_GRANULE
    assert manager.fabric.owner('M0', 1) == 'H1'


def test_binding_conflicts(pooled):
    manager, _ = pooled
    s0 = manager.fabric.switch('S0')
    with pytest.raises(PortAlreadyBound):
        s0.bind(2, 2)
    with pytest.raises(UnknownEntity):
        s0.bind(2, 3, ld_id=0)
    with pytest.raises(UnknownEntity):
        s0.bind(2, 4, ld_id=2)
    with pytest.raises(UnknownEntity):
        s0.bind(2, 0)
    with pytest.raises(UnknownEntity):
        manager.fabric.switch('S9')


def test_unbind_needs_a_cooperative_host(pooled):
    manager, _ = pooled
    manager.unresponsive.add('H1')
    unbind = parse_fm_script('UNBIND S0 4 WAIT\nUNBIND S0 4 FORCE')
    with pytest.raises(HostUncooperative):
        manager.execute(unbind[0])

    event, = manager.execute(unbind[1]).events
    assert event.kind is HostEventKind.SURPRISE_REMOVE
    assert manager.fabric.owner('D1') is None
    assert 'D1' not in manager.fabric.vhs['H1'].members


def test_query_and_cci_stubs(pooled):
    manager, _ = pooled
    reply = manager.execute(parse_fm_script('QUERY M0')[0]).reply
    assert reply['owners'] == {'M0.LD0': 'H0', 'M0.LD1': 'H1'}
    stub = manager.execute(parse_fm_script('GetLdInfo M0')[0])
    assert stub.reply == {'command': 'GetLdInfo', 'supported': True, 'args': ['M0']}
    with pytest.raises(UnknownEntity):
        manager.execute(parse_fm_script('QUERY Z9')[0])


def test_set_ld_rules(pooled):
    manager, _ = pooled
    for text in ('SETLD D0 256 0-0', 'SETLD M0 256 0-1,1-2', 'SETLD M0 256 0-0,1-1,2-2',
                 'SETLD M0 256 0-0 via=S9'):
        with pytest.raises(FabricError):
            manager.execute(parse_fm_script(text)[0])
    reply = manager.execute(parse_fm_script('SETLD M0 128 0-1,2-2 via=S0')[0]).reply
    assert reply['ld_sizes_mb'] == [256, 128]


# HIERARCHICAL ROUTING
# ====================
def test_hbr_routes_by_host_decoders(pooled):
    manager, _ = pooled
    s0, fabric = manager.fabric.switch('S0'), manager.fabric

    port, msg = route_hbr(_rd(CXL_WINDOW_BASE + DECODER_GRANULE), s0, fabric, source='H0')
    assert (port, msg.ld_id) == (2, None)

    port, msg = route_hbr(_rd(CXL_WINDOW_BASE), s0, fabric, source='H1')
    assert (port, msg.ld_id) == (4, 1)

    reply = Message(opcode=S2MDRS.MemData, address=Address(hpa=CXL_WINDOW_BASE), ld_id=0)
    assert route_hbr(reply, s0, fabric, source='M0')[0] == 0

    with pytest.raises(NoRoute):
        route_hbr(_rd(CXL_WINDOW_BASE + 4 * DECODER_GRANULE), s0, fabric, source='H0')


# PORT-BASED ROUTING
# ==================
def test_routing_tables_span_the_cascade(cxl3_fabric):
    tables = build_routing_tables(cxl3_fabric)
    assert tables['S0'][1] == (0,)
    assert tables['S0'][10] == (3,)
    assert tables['S1'][11] == (3,)
    assert tables['S1'][10] == (2,)
    assert routing_gaps(cxl3_fabric, tables) == {}


def test_failed_isl_leaves_gaps_until_tables_are_redistributed():
    topology = parse_topology(TRIANGLE)
    manager = FabricManager(Fabric(topology))
    before = build_routing_tables(topology)
    d0 = topology.pid_of('D0')
    assert before['S0'][d0] == (1,)

    after = manager.fail_link('S0', 'S1')
    assert routing_gaps(topology, before, failed=manager.failed_links)['S0'] == (d0,)
    assert after['S0'][d0] == (2,)
    assert routing_gaps(topology, after, failed=manager.failed_links) == {}
    with pytest.raises(UnknownEntity):
        manager.fail_link('H0', 'D0')


def test_multipath_routing():
    topology = parse_topology(PARALLEL_ISLS)
    manager = FabricManager(Fabric(topology))
    s0 = manager.fabric.switch('S0')
    d0 = topology.pid_of('D0')
    assert s0.routing[d0] == (1, 2)

    ndr = PbrMessage(inner=Message(opcode=S2MNDR.Cmp, tag=7), dpid=d0, spid=1)
    assert len({pbr_route(ndr, s0, rng=default_rng(seed)) for seed in range(8)}) == 1

    uio = PbrMessage(inner=Message(opcode=IoOpcode.UioWr, payload_dw=16), dpid=d0, spid=1)
    picks = [pbr_route(uio, s0, rng=default_rng(seed)) for seed in range(16)]
    assert set(picks) == {1, 2}
    assert picks == [pbr_route(uio, s0, rng=default_rng(seed)) for seed in range(16)]

    with pytest.raises(NoRoute):
        pbr_route(PbrMessage(inner=ndr.inner, dpid=99), s0)


def test_flow_keys():
    snoop = Message(opcode=H2DReq.SnpInv, address=Address.of_line(5), cache_id=0)
    assert flow_key(snoop) == ('CXL.cache', 'snoop-go', 5)
    assert flow_key(Message(opcode=S2MNDR.Cmp, tag=3)) == ('CXL.mem', 'NDR', 3)
    assert flow_key(Message(opcode=IoOpcode.MemWr, payload_dw=1)) == ('CXL.io', 'ordered', 0)
    assert flow_key(Message(opcode=IoOpcode.UioWr, payload_dw=1)) is None
    assert flow_key(_rd(0)) is None


def test_edge_ports(cxl3_fabric):
    host_edge = EdgePort(pid=1, fast=cxl3_fabric.fast['S0'], cache_pids={0: 11})
    assert edge_translate(_rd(CXL_WINDOW_BASE + SEGMENT), EdgeDirection.TO_FABRIC,
                          host_edge).dpid == 11
    snoop = Message(opcode=H2DReq.SnpInv, address=Address.of_line(0), cache_id=0)
    assert host_edge.dpid_for(snoop) == 11
    with pytest.raises(UnmappedId):
        host_edge.dpid_for(snoop.evolve(cache_id=3))

    gfd_edge = EdgePort(pid=10)
    assert gfd_edge.dpid_for(Message(opcode=S2MDRS.MemData, dpid=4)) == 4
    with pytest.raises(UnmappedId):
        gfd_edge.dpid_for(Message(opcode=S2MDRS.MemData))

    mld_edge = EdgePort(pid=5, ld_pids=(1, 2))
    assert mld_edge.dpid_for(Message(opcode=S2MNDR.Cmp, ld_id=1)) == 2
    with pytest.raises(UnmappedId):
        mld_edge.dpid_for(Message(opcode=S2MNDR.Cmp, ld_id=3))
    arriving = PbrMessage(inner=_rd(0), dpid=5, spid=2)
    assert edge_translate(arriving, EdgeDirection.FROM_FABRIC, mld_edge).ld_id == 1


# DEVLOAD
# =======
@pytest.mark.parametrize('utilisation, level', [
    (0.5, DevLoad.LIGHT), (0.95, DevLoad.OPTIMAL), (1.1, DevLoad.MODERATE),
    (1.5, DevLoad.SEVERE)])
def test_classify_load(utilisation, level):
    assert classify_load(utilisation) is level


def test_devload_update():
    state = DevLoadState()
    assert devload_update(state, 'H0', DevLoad.SEVERE) == pytest.approx(50.0)
    assert devload_update(state, 'H0', DevLoad.MODERATE) == pytest.approx(40.0)
    assert devload_update(state, 'H0', DevLoad.LIGHT) == pytest.approx(44.0)
    assert devload_update(state, 'H1', DevLoad.LIGHT) == pytest.approx(100.0)
    assert state.level is DevLoad.LIGHT


@pytest.mark.parametrize('start_rate', [0.0, 1.0, 200.0])
def test_closed_loop_settles_near_capacity(start_rate):
    history = DevLoadController().run_closed_loop(capacity=100.0, start_rate=start_rate)
    assert history.shape == (200,)
    assert 90.0 <= history[-1] <= 110.0


# ERROR CONTAINMENT & ISLS
# ========================
def test_containment_completes_stuck_requests():
    containment = ErrorContainment(timeout_ps=1000)
    containment.track('H0', 'D0', _rd(0, tag=1), now_ps=0)
    containment.track('H0', 'D0', Message(opcode=M2SReq.MemInv, address=Address(hpa=64),
                                          tag=2), now_ps=0)
    containment.track('H1', 'D1', _rd(0, tag=1), now_ps=500)
    assert containment.complete('H1', 1)

    assert containment.expire(999) == []
    out = containment.expire(1000)
    assert [(host, msg.opcode, msg.poison) for host, msg in out] == [
        ('H0', S2MDRS.MemData, True), ('H0', S2MNDR.Cmp, True)]
    assert containment.dead == {'D0'}
    assert containment.contained == 2
    assert not containment.outstanding


def test_containment_waits_for_a_quiet_endpoint():
    containment = ErrorContainment(timeout_ps=1000)
    containment.track('H0', 'D0', _rd(0, tag=1), now_ps=0)
    containment.track('H0', 'D0', _rd(1, tag=2), now_ps=0)
    assert containment.next_deadline() == 1000

    containment.heard_from('D0', 800)
    assert containment.next_deadline() == 1800
    assert containment.expire(1000) == []
    assert not containment.dead

    containment.heard_from('D0', 500)
    assert len(containment.expire(1800)) == 2
    assert containment.dead == {'D0'}
    assert containment.next_deadline() is None


def test_isl_credit_pools():
    port = IslPort(switch='S0', port=3, credits=2)
    assert len(port.channels(IslDirection.UPSTREAM)) == 12
    assert port.send(IslDirection.UPSTREAM, Channel.S2M_DRS)
    assert port.send(IslDirection.UPSTREAM, Channel.S2M_DRS)
    assert not port.send(IslDirection.UPSTREAM, Channel.S2M_DRS)
    assert port.send(IslDirection.DOWNSTREAM, Channel.S2M_DRS)
    port.credit_return(IslDirection.UPSTREAM, Channel.S2M_DRS)
    assert port.send(IslDirection.UPSTREAM, Channel.S2M_DRS)
    with pytest.raises(ValueError):
        port.send(IslDirection.UPSTREAM, Channel.IO_P)
