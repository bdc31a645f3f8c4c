"""Discrete-event simulation runs: bandwidth, determinism, coherence, containment & monitors."""


import pytest

from cxlsim.errors import ConfigError, Deadlock, FabricError, MonitorViolation
from cxlsim.fabric.containment import ErrorContainment
from cxlsim.fabric.topology import parse_topology
from cxlsim.flit import FlitMode
from cxlsim.perf import LinkConfig, MixKind, TrafficMix, mem_bandwidth
from cxlsim.sim import DeviceNode, HostNode, run, run_repeated
from cxlsim.util.config import WorkloadConfig, as_dict, load_workload, parse_model


def _workloads(**data) -> WorkloadConfig:
    return parse_model(WorkloadConfig, data)


def _single_read() -> WorkloadConfig:
    return _workloads(workloads=[{'host': 'H0', 'device': 'D0', 'kind': 'script',
                                  'steps': [{'op': 'read', 'line': 3}]}])


def _first(records, agent: str, direction: str, opcode: str) -> int:
    return next(i for i, r in enumerate(records)
                if r.split()[1:3] == [agent, direction] and r.split()[4] == opcode)


# BANDWIDTH
# =========
def _direct(device_type: int, gts: int):
    return parse_topology(f'HOST H0\nDEVICE D0 kind=SLD type={device_type}\n'
                          f'LINK H0 D0 width=16 gts={gts}\n')


@pytest.mark.slow
@pytest.mark.parametrize('device_type', [2, 3])
@pytest.mark.parametrize('flit_mode, gts', [(FlitMode.F68, 32), (FlitMode.F256, 64)])
@pytest.mark.parametrize('kind', [MixKind.MEM_1R0W, MixKind.MEM_1R1W, MixKind.MEM_2R1W])
def test_mem_stream_matches_analytical_bandwidth(kind, flit_mode, gts, device_type):
    lines = 12000
    workloads = _workloads(workloads=[{'host': 'H0', 'device': 'D0', 'mix': kind.name,
                                       'lines': lines}],
                           sim={'flit_mode': flit_mode.value})
    result = run(_direct(device_type, gts), workloads)
    stats = result.stats

    m2s, s2m = mem_bandwidth(LinkConfig(flit_mode=flit_mode, rate_gts=gts),
                             TrafficMix(kind=kind, device_type=device_type))
    assert stats.number('steady_bw', 'D0->H0') == pytest.approx(float(s2m), rel=0.01)
    if m2s:
        assert stats.number('steady_bw', 'H0->D0') == pytest.approx(float(m2s), rel=0.01)

    reads, writes = kind.reads_writes
    per_unit = lines // (reads + writes)
    assert stats.number('data_bytes', 'D0->H0') == 64 * reads * per_unit
    assert stats.number('data_bytes', 'H0->D0') == 64 * writes * per_unit

    assert stats.number('completed', 'H0') == lines
    assert stats.number('contained', 'H0') == 0
    assert result.verdicts == {'directory': 'pass', 'conservation': 'pass'}


def test_horizon_cuts_the_run_short(data_dir, sld_direct):
    result = run(sld_direct, load_workload(data_dir / 'mem_1r0w.yaml'), horizon_ps=500_000)
    assert result.end_ps == 500_000
    assert 0 < result.stats.number('completed', 'H0') < 10000


def test_empty_workload(sld_direct):
    result = run(sld_direct, WorkloadConfig())
    assert result.end_ps == 0
    assert len(result.trace) == 0
    assert result.stats.number('sim_time') == 0
    assert result.verdicts == {'directory': 'pass', 'conservation': 'pass'}


# DETERMINISM
# ===========
def _mixed() -> WorkloadConfig:
    return _workloads(workloads=[{'host': 'H0', 'device': 'D0', 'mix': 'MEM_2R1W', 'lines': 300},
                                 {'host': 'H1', 'device': 'D1', 'mix': 'MEM_1R1W', 'lines': 300}])


def test_same_seed_same_trace_and_stats(switch_topology):
    first, second = (run(switch_topology, _mixed(), seed=7) for _ in range(2))
    assert first.trace.render() == second.trace.render()
    assert first.stats.to_csv() == second.stats.to_csv()
    assert first.trace.header == '# cxlsim seed=7 rng=numpy.PCG64'


def test_repeated_runs_are_independent_instances(switch_topology):
    results = run_repeated(switch_topology, _mixed(), seed=3, repeat=3)
    assert [r.seed for r in results] == [3, 4, 5]
    assert results[0].stats.to_csv() == run(switch_topology, _mixed(), seed=3).stats.to_csv()


# SWITCHED & POOLED DEVICES
# =========================
def test_pooled_mld_serves_each_host_its_own_ld(switch_topology):
    workloads = _workloads(workloads=[
        {'host': 'H0', 'device': 'M0', 'ld': 0, 'mix': 'MEM_1R1W', 'lines': 100},
        {'host': 'H1', 'device': 'M0', 'ld': 1, 'mix': 'MEM_1R0W', 'lines': 100}])
    result = run(switch_topology, workloads)

    assert result.stats.number('completed', 'H0') == 100
    assert result.stats.number('completed', 'H1') == 100
    assert result.stats.number('forwarded', 'S0') > 0
    received = [r for r in result.trace.records if r.split()[1:3] == ['M0', 'RX']]
    assert any('ld=0' in r for r in received)
    assert any('ld=1' in r for r in received)


# GLOBAL FABRIC-ATTACHED MEMORY
# =============================
def test_gfd_back_invalidates_sharers_before_granting(data_dir, cxl3_fabric):
    result = run(cxl3_fabric, load_workload(data_dir / 'gfd_bisnp.yaml'))
    records = result.trace.records

    granted = _first(records, 'H4', 'RX', 'Cmp-E')
    assert _first(records, 'H1', 'RX', 'BISnpInv') < granted
    assert _first(records, 'H3', 'RX', 'BISnpInv') < granted
    assert result.verdicts == {'directory': 'pass', 'conservation': 'pass'}


# CONTAINMENT
# ===========
@pytest.mark.slow
def test_failed_device_is_contained_without_hurting_its_sibling(data_dir, switch_topology):
    config = load_workload(data_dir / 'containment.yaml')
    healthy = parse_model(WorkloadConfig, {**as_dict(config), 'fail': None})

    failed_run = run(switch_topology, config)
    healthy_run = run(switch_topology, healthy)
    stats = failed_run.stats

    assert stats.number('contained', 'H0') > 0
    assert stats.number('poisoned', 'H0') > 0
    assert stats.number('dropped', 'D0') > 0
    assert stats.number('contained', 'H1') == 0
    assert stats.number('completed', 'H1') == 4000

    sibling = stats.number('steady_bw', 'S0->H1')
    assert sibling == pytest.approx(healthy_run.stats.number('steady_bw', 'S0->H1'), rel=0.02)


def test_busy_device_is_never_contained(sld_direct):
    # thousands of queued requests wait far longer than the timeout, yet the
    # device keeps answering
    workloads = _workloads(workloads=[{'host': 'H0', 'device': 'D0', 'mix': 'MEM_2R1W',
                                       'lines': 3000}])
    result = run(sld_direct, workloads)
    assert result.stats.number('contained', 'H0') == 0
    assert result.stats.number('completed', 'H0') == 3000
    assert result.verdicts == {'directory': 'pass', 'conservation': 'pass'}


def test_responses_after_containment_are_dropped(sld_direct):
    workloads = _workloads(workloads=[{'host': 'H0', 'device': 'D0', 'kind': 'script',
                                       'steps': [{'op': 'read', 'line': 3},
                                                 {'op': 'write', 'line': 4, 'value': 9}]}],
                           sim={'containment_timeout_ns': 50})
    result = run(sld_direct, workloads)
    assert result.stats.number('contained', 'H0') == 2
    assert result.stats.number('completed', 'H0') == 2
    late = [r for r in result.trace.records if 'late' in r.split()]
    assert [r.split()[1:3] for r in late] == [['H0', 'RX'], ['H0', 'RX']]
    assert result.verdicts == {'directory': 'pass', 'conservation': 'pass'}


# FLIT ERRORS
# ===========
def test_damaged_flits_are_replayed(sld_direct):
    workloads = _workloads(workloads=[{'host': 'H0', 'device': 'D0', 'mix': 'MEM_1R1W',
                                       'lines': 400}],
                           sim={'flit_error_rate': 0.05})
    result = run(sld_direct, workloads, seed=1)

    replays = sum(int(row['value']) for row in result.stats.rows if row['metric'] == 'replays')
    assert replays > 0
    assert result.stats.number('completed', 'H0') == 400
    assert result.stats.number('contained', 'H0') == 0


# MONITORS & FAILURES
# ===================
def test_swallowed_requests_deadlock(monkeypatch, sld_direct):
    monkeypatch.setattr(DeviceNode, '_receive', lambda self, msg: None)
    monkeypatch.setattr(ErrorContainment, 'expire', lambda self, now_ps: [])
    with pytest.raises(Deadlock):
        run(sld_direct, _single_read())


def test_lost_request_violates_conservation(monkeypatch, sld_direct):
    def forget(self, request):
        del self.requests[request.tag]
        self.containment.complete(self.id, request.tag)

    monkeypatch.setattr(HostNode, '_complete', forget)
    with pytest.raises(MonitorViolation) as err:
        run(sld_direct, _single_read())
    assert 'H0 LOST 1 REQUEST(S)' in str(err.value)
    assert err.value.prefix[0].startswith('T=0 H0 TX')


def test_run_rejects_bad_inputs(sld_direct):
    with pytest.raises(ConfigError):
        run(sld_direct, _single_read(), monitors=['clairvoyance'])
    with pytest.raises(ConfigError):
        run(sld_direct, _workloads(workloads=[{'host': 'H0', 'device': 'D7', 'lines': 1}]))
    with pytest.raises(ConfigError):
        run(sld_direct, _workloads(fail={'device': 'D7'}))
    with pytest.raises(FabricError):
        run(parse_topology('HOST H0\nDEVICE D0 kind=SLD type=3', validate=False))
