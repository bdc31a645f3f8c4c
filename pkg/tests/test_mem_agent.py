"""CXL.mem agents: HDM regions, devices, multi-host directories & Back-Invalidate."""


from numpy.random import default_rng
import pytest

from cxlsim.errors import ConfigError, MonitorViolation, OutOfRange, RegionOverlap
from cxlsim.mem import (Bias, DeviceAttr, Directory, DirectoryMonitor, DirState, HdmKind,
                        HdmRegion, HostDecoderSet, HostMemAgent, MemDevice, MemDomain,
                        bias_flip, check_disjoint, format_devattr, mem_read, mem_write,
                        parse_devattr, run_random_workload)
from cxlsim.mem.region import CXL_WINDOW_BASE, DECODER_GRANULE, MB
from cxlsim.protocol import Address, CacheState, line_value


A0 = Address.of_line(0)
A1 = Address.of_line(1)


def _region(kind: HdmKind = HdmKind.HDM_H, owner: str = 'D0') -> HdmRegion:
    return HdmRegion(base=0, size=MB, kind=kind, owner_device=owner)


def _shared_gfd(capacity=None, group_size: int = 1) -> MemDomain:
    device = MemDevice(name='G0', regions=[_region(HdmKind.HDM_DB, 'G0')],
                       directory=Directory(hosts=(1, 3, 4), capacity=capacity,
                                           group_size=group_size))
    return MemDomain(device, host_ids=(1, 3, 4))


# HDM-H
# =====
def test_type3_read_returns_data_only():
    domain = MemDomain(MemDevice(regions=[_region()]))
    domain.read(0, A0, exclusive=True)
    domain.drain()
    assert domain.quiescent
    assert domain.hosts[0].state(A0) is CacheState.E
    assert domain.device.line(A0).meta == 2
    assert domain.hosts[0].last_meta[A0.line] == 0


def test_write_then_read_back():
    domain = MemDomain(MemDevice(regions=[_region()]))
    domain.send_down(0, [domain.hosts[0].write(A1, value=5)])
    domain.drain()
    domain.read(0, A1)
    domain.drain()
    assert line_value(domain.hosts[0].cache[A1.line].data) == 5
    assert domain.device.writes == 1


def test_partial_write_merges_enabled_bytes():
    device = MemDevice(regions=[_region()])
    host = HostMemAgent(needs_cmp=lambda line: False)
    mem_write(device, host.write(A0, value=0x1111))
    mem_write(device, host.write(A0, value=0x2222, byte_enable=0x1))
    assert device.line(A0).data[:2] == b'\x22\x11'


def test_read_outside_every_region_is_poisoned():
    device = MemDevice(regions=[_region()])
    host = HostMemAgent(needs_cmp=lambda line: False)
    outside = Address(hpa=2 * MB)
    for rsp in mem_read(device, host.read(outside)):
        host.receive(rsp)
    assert host.stats.poisoned == 1
    with pytest.raises(OutOfRange):
        device.region_of(outside)


def test_region_rules():
    with pytest.raises(RegionOverlap):
        check_disjoint([_region(), HdmRegion(base=MB // 2, size=MB)])
    with pytest.raises(AssertionError):
        MemDevice(regions=[_region(HdmKind.HDM_D)], device_type=3)
    with pytest.raises(AssertionError):
        MemDevice(regions=[_region(HdmKind.HDM_DB)])


# HDM-D
# =====
def test_bias_flip_and_device_store():
    device = MemDevice(regions=[_region(HdmKind.HDM_D)], device_type=2)
    domain = MemDomain(device)
    domain.read(0, A0)
    domain.drain()
    assert domain.hosts[0].state(A0) is CacheState.S

    transcript = bias_flip(domain, A0)
    assert transcript == ['D0 -> H0: RdOwnNoData A=0x0', 'H0 -> D0: MemRdFwd A=0x0']
    assert device.bias_of(A0) is Bias.DEVICE
    assert domain.hosts[0].state(A0) is CacheState.I
    assert bias_flip(domain, A0) == []

    device.device_store(A0, 77)
    domain.read(0, A0)
    domain.drain()
    assert line_value(domain.hosts[0].cache[A0.line].data) == 77
    assert device.bias_of(A0) is Bias.HOST_S


# HDM-DB
# ======
def test_exclusive_read_back_invalidates_sharers():
    domain = _shared_gfd()
    monitor = DirectoryMonitor()
    for host in (1, 3):
        domain.read(host, A0)
        domain.drain(monitor=monitor)
    assert domain.directory_state(A0.line) == 'S{H1,H3}'

    domain.read(4, A0, exclusive=True)
    domain.drain(monitor=monitor)

    transcript = domain.transcript
    grant = transcript.index('G0 -> H4: Cmp-E A=0x0')
    assert transcript.index('G0 -> H1: BISnpInv A=0x0') < grant
    assert transcript.index('G0 -> H3: BISnpInv A=0x0') < grant
    assert domain.directory_state(A0.line) == 'E{H4}'
    assert domain.host_states(A0.line) == {'H1': CacheState.I, 'H3': CacheState.I,
                                           'H4': CacheState.E}


def test_dirty_owner_writes_back_before_sharing():
    domain = _shared_gfd()
    domain.read(1, A0, exclusive=True)
    domain.drain()
    domain.store(1, A0, 9)
    domain.read(3, A0)
    domain.drain(monitor=DirectoryMonitor())
    assert line_value(domain.hosts[3].cache[A0.line].data) == 9
    assert domain.host_states(A0.line)['H1'] is CacheState.S
    assert domain.device.directory.entry(A0.line).state is DirState.S


def test_full_directory_evicts_a_victim():
    domain = _shared_gfd(capacity=1)
    domain.read(1, A0)
    domain.drain()
    domain.read(1, A1)
    domain.drain(monitor=DirectoryMonitor())
    assert domain.hosts[1].state(A0) is CacheState.I
    assert domain.hosts[1].state(A1) is CacheState.S
    assert len(domain.device.directory) == 1


def test_coarse_directory_tracks_groups():
    directory = Directory(hosts=(1, 3, 4), group_size=2)
    directory.add_sharer(0x40, 1)
    assert directory.sharers(0x40) == {1, 3}
    directory.remove(0x40, 1)
    assert directory.entry(0x40).state is DirState.S
    assert directory.snoop_targets(0x40, requester=4, exclusive=True) == [1, 3]


def test_directory_monitor_catches_an_untracked_copy():
    domain = _shared_gfd()
    domain.read(1, A0)
    domain.drain()
    domain.device.directory.invalidate(A0.line)
    with pytest.raises(MonitorViolation):
        DirectoryMonitor().check(domain, prefix=domain.transcript)


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_random_workloads_keep_the_directory_sound(seed):
    domain = _shared_gfd(capacity=2)
    actions = run_random_workload(domain, default_rng(seed), lines=[A0, A1, Address.of_line(2)],
                                  steps=300, monitor=DirectoryMonitor())
    assert actions > 0
    assert domain.quiescent


# HOST DECODERS & DEVICE ATTRIBUTES
# =================================
def test_decoders_assign_aligned_ranges():
    decoders = HostDecoderSet()
    first = decoders.program(DeviceAttr(device='D0', latency_ns=170, bandwidth_gbs=64,
                                        size_mb=256))
    second = decoders.program(DeviceAttr(device='D1', latency_ns=170, bandwidth_gbs=64,
                                         size_mb=512))
    assert first.base == CXL_WINDOW_BASE
    assert second.base == CXL_WINDOW_BASE + 2 * DECODER_GRANULE
    assert decoders.decode(Address(hpa=second.base + 64)) == second
    assert decoders.remove('D0') == [first]
    with pytest.raises(OutOfRange):
        decoders.decode(Address(hpa=first.base))


def test_devattr_records():
    text = 'DEVATTR device=D0 latency_ns=170 bandwidth_gbs=64 size_mb=256'
    attr = parse_devattr(text)
    assert attr.size == 256 * MB
    assert format_devattr(attr) == text
    with pytest.raises(ConfigError):
        parse_devattr('DEVATTR device=D0')
    with pytest.raises(ConfigError):
        parse_devattr('DEVATTR device=D0 latency_ns=1 bandwidth_gbs=1 size_mb=0')
