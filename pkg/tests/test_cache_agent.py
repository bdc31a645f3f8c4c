"""CXL.cache agents: device caches, the home agent & the coherence monitors."""


import pytest

from cxlsim.cache import (CacheDomain, CoherenceMonitor, DeviceCache, Direction, HomeAgent,
                          HolderState, PermissionMap, SnoopFilter, deliver_h2d,
                          device_apply_snoop, device_issue, device_store, host_handle_d2h)
from cxlsim.errors import (AddressBusy, CoherenceError, IllegalStateForEvict,
                           MonitorViolation, PermissionDenied)
from cxlsim.protocol import Address, CacheState, Channel, D2HReq, D2HRsp, H2DReq, Message


A0 = Address.of_line(0)
A1 = Address.of_line(1)


def _settle(domain: CacheDomain) -> CacheDomain:
    domain.drain()
    assert domain.quiescent
    CoherenceMonitor().check(domain)
    return domain


def test_rd_shared_grants_s_and_tracks_the_holder():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdShared, A0)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.S
    assert domain.host.sf.holders(A0.line) == {0: HolderState.S}


def test_rd_own_invalidates_the_previous_owner():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdOwn, A0)
    _settle(domain)
    domain.issue(1, D2HReq.RdOwn, A0)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.I
    assert domain.devices[1].state(A0) is CacheState.E


def test_dirty_data_forwarded_to_a_sharing_reader():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdOwn, A0)
    _settle(domain)
    domain.store(0, A0, 42)
    domain.issue(1, D2HReq.RdShared, A0)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.S
    assert domain.devices[1].state(A0) is CacheState.S
    assert domain.latest[A0.line] == 42
    assert domain.host.read_memory(A0.line) == domain.devices[1].lines[A0.line].data


def test_dirty_evict_writes_back():
    domain = CacheDomain(n_devices=1)
    domain.issue(0, D2HReq.RdOwn, A0, store_value=7)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.M
    domain.issue(0, D2HReq.DirtyEvict, A0)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.I
    assert A0.line not in domain.host.sf
    domain.host_access(A0, exclusive=False)
    _settle(domain)
    assert domain.host.cpu_state(A0.line) is CacheState.S


def test_rd_curr_installs_nothing():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdCurr, A0)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.I
    assert domain.devices[0].snapshots == [(A0.line, 0)]
    assert A0.line not in domain.host.sf


def test_host_exclusive_access_snoops_devices():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdShared, A0)
    domain.issue(1, D2HReq.RdShared, A0)
    _settle(domain)
    domain.host_access(A0, exclusive=True, store_value=9)
    _settle(domain)
    assert all(dev.state(A0) is CacheState.I for dev in domain.devices)
    assert domain.host.cpu_state(A0.line) is CacheState.M


def test_issue_errors():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdShared, A0)
    with pytest.raises(AddressBusy):
        domain.issue(0, D2HReq.RdOwn, A0)
    with pytest.raises(IllegalStateForEvict):
        domain.issue(1, D2HReq.DirtyEvict, A0)
    with pytest.raises(CoherenceError):
        domain.store(1, A0, 1)


def test_permission_map_denies_cxl_cache():
    permissions = PermissionMap()
    permissions.deny(cache_id=1, base=A1.line, size=64)
    domain = CacheDomain(permissions=permissions)
    with pytest.raises(PermissionDenied):
        domain.issue(1, D2HReq.RdShared, A1)
    domain.issue(0, D2HReq.RdShared, A1)
    _settle(domain)


def test_full_snoop_filter_back_invalidates_a_victim():
    domain = CacheDomain(sf_capacity=1)
    domain.issue(0, D2HReq.RdShared, A0)
    _settle(domain)
    domain.issue(1, D2HReq.RdShared, A1)
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.I
    assert domain.devices[1].state(A1) is CacheState.S
    assert len(domain.host.sf) == 1


def test_snoop_waits_behind_an_earlier_go():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdOwn, A0)
    domain.deliver(next(d for d in domain.deliverable() if d.direction is Direction.D2H))
    domain.host_access(A0, exclusive=True)

    # the SnpInv is queued behind GO for the same line
    assert domain.h2d[0].queues[Channel.H2D_REQ]
    assert Channel.H2D_REQ not in domain.h2d[0].deliverable()
    _settle(domain)
    assert domain.devices[0].state(A0) is CacheState.I
    assert not domain.go_push_violations


def test_snoop_overtaking_go_flagged_without_go_push():
    domain = CacheDomain(go_push=False)
    domain.issue(0, D2HReq.RdOwn, A0)
    domain.deliver(next(d for d in domain.deliverable() if d.direction is Direction.D2H))
    domain.host_access(A0, exclusive=True)
    snoop = next(d for d in domain.deliverable() if d.channel is Channel.H2D_REQ)
    domain.deliver(snoop)
    found = CoherenceMonitor().first(domain)
    assert found is not None and found.monitor == 'GO-PUSH'


def test_monitor_check_raises_with_prefix():
    domain = CacheDomain(go_push=False)
    domain.issue(0, D2HReq.RdOwn, A0)
    domain.deliver(next(d for d in domain.deliverable() if d.direction is Direction.D2H))
    domain.host_access(A0, exclusive=True)
    domain.deliver(next(d for d in domain.deliverable() if d.channel is Channel.H2D_REQ))
    with pytest.raises(MonitorViolation) as err:
        CoherenceMonitor().check(domain, prefix=['step 1', 'step 2'])
    assert err.value.prefix == ('step 1', 'step 2')


def test_device_snoop_responses():
    dev = DeviceCache(cache_id=0)
    device_issue(dev, D2HReq.RdOwn, A0)
    snoop = Message(opcode=H2DReq.SnpInv, address=A0, tag=40000, cache_id=0)
    # no GO yet: the line is still invalid here
    assert [m.opcode for m in device_apply_snoop(dev, snoop)] == [D2HRsp.RspIHitI]


def test_functional_entry_points():
    host = HomeAgent()
    dev = DeviceCache(cache_id=0)
    out = host_handle_d2h(host, device_issue(dev, D2HReq.RdOwn, A0)[0])
    for msg in out:
        dev.receive(msg)
    assert dev.state(A0) is CacheState.E
    device_store(dev, A0, 3)
    assert dev.state(A0) is CacheState.M


def test_deliver_h2d_prefers_responses():
    domain = CacheDomain()
    domain.issue(0, D2HReq.RdOwn, A0)
    domain.deliver(next(d for d in domain.deliverable() if d.direction is Direction.D2H))
    delivered = deliver_h2d(domain.h2d[0])
    assert delivered[0].channel is Channel.H2D_RSP


def test_snoop_filter_capacity_and_victim():
    sf = SnoopFilter(capacity=2)
    sf.grant(0x0, 0, CacheState.S)
    sf.grant(0x40, 1, CacheState.E)
    assert sf.full
    assert sf.victim(exclude=(0x0,)) == 0x40
    sf.remove(0x40, 1)
    assert not sf.full
