"""CXLSim CLI: exit codes & outputs of every sub-command."""


from click.testing import CliRunner
import pytest

from cxlsim import __version__
from cxlsim.cli import cxlsim


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def small_workload(tmp_path):
    path = tmp_path / 'small.yaml'
    path.write_text('workloads:\n'
                    '  - {host: H0, device: D0, mix: MEM_2R1W, lines: 60}\n', encoding='utf-8')
    return path


def test_version(runner):
    result = runner.invoke(cxlsim, ['--version'])
    assert result.exit_code == 0
    assert result.output.strip() == f'cxlsim {__version__}'


# TABLES
# ======
@pytest.mark.parametrize('name, flit', [('mem-bw', '68'), ('cache-bw', '256'),
                                        ('link-eff', '68'), ('latency', '68')])
def test_tables_csv_matches_golden(runner, golden_dir, name, flit):
    result = runner.invoke(cxlsim, ['tables', '--table', name, '--flit', flit, '--csv'])
    assert result.exit_code == 0, result.output
    assert result.output == (golden_dir / f'{name}_{flit}.csv').read_text(encoding='utf-8')


def test_tables_text_on_a_narrow_link(runner):
    result = runner.invoke(cxlsim, ['tables', '--table', 'io-bw', '--flit', '128lo',
                                    '--width', '4', '--gts', '64'])
    assert result.exit_code == 0, result.output
    assert result.output.split()[:4] == ['payload_dw', 'read', 'write', 'rw5050']


def test_tables_usage_errors(runner):
    assert runner.invoke(cxlsim, ['tables', '--table', 'nope']).exit_code == 2
    assert runner.invoke(cxlsim, ['tables']).exit_code == 2
    assert runner.invoke(cxlsim, ['tables', '--table', 'io-bw', '--width', '3']).exit_code == 2


# VALIDATE
# ========
@pytest.mark.parametrize('name', ['sld_direct.topo', 'switch.topo', 'cxl3_fabric.topo'])
def test_shipped_topologies_validate(runner, data_dir, name):
    result = runner.invoke(cxlsim, ['validate', '--topology', str(data_dir / name)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith('OK: ')


def test_invalid_topology(runner, tmp_path):
    path = tmp_path / 'lonely.topo'
    path.write_text('HOST H0\nDEVICE D0 kind=SLD type=3\n', encoding='utf-8')
    result = runner.invoke(cxlsim, ['validate', '--topology', str(path)])
    assert result.exit_code == 1
    assert 'INVALID D0: unreachable from every host' in result.output


def test_unparsable_topology(runner, tmp_path):
    path = tmp_path / 'garbage.topo'
    path.write_text('ROUTER R0\n', encoding='utf-8')
    result = runner.invoke(cxlsim, ['validate', '--topology', str(path)])
    assert result.exit_code == 1
    assert result.output.startswith('ERROR ***')


# CHECK-TRACE
# ===========
def test_clean_trace(runner, data_dir):
    result = runner.invoke(cxlsim, ['check-trace', str(data_dir / 'producer_consumer.trace')])
    assert result.exit_code == 0, result.output
    assert result.output.strip() == 'OK: 4 event(s), legacy ordering'


def test_stale_trace(runner, data_dir):
    result = runner.invoke(cxlsim, ['check-trace',
                                    str(data_dir / 'producer_consumer_stale.trace')])
    assert result.exit_code == 1
    assert result.output.startswith('VIOLATION 40 DEV1 RD data 0: stale after observing flag=1')


def test_malformed_trace(runner, tmp_path):
    path = tmp_path / 'bad.trace'
    path.write_text('MODE sideways\n', encoding='utf-8')
    result = runner.invoke(cxlsim, ['check-trace', str(path)])
    assert result.exit_code == 1
    assert 'LINE 1: UNKNOWN MODE' in result.output


def test_missing_trace_file(runner, tmp_path):
    assert runner.invoke(cxlsim, ['check-trace', str(tmp_path / 'nope.trace')]).exit_code == 2


# SIMULATE
# ========
def test_simulate_writes_trace_and_stats(runner, data_dir, small_workload, tmp_path):
    trace, stats = tmp_path / 'run.trace', tmp_path / 'run.csv'
    result = runner.invoke(cxlsim, ['simulate', '--topology', str(data_dir / 'sld_direct.topo'),
                                    '--workload', str(small_workload), '--seed', '5',
                                    '--trace', str(trace), '--stats', str(stats), '--csv'])
    assert result.exit_code == 0, result.output
    assert result.output.startswith('metric,scope,value,unit\n')
    assert result.output == stats.read_text(encoding='utf-8')
    assert 'completed,H0,60,count' in result.output
    assert trace.read_text(encoding='utf-8').startswith('# cxlsim seed=5 rng=numpy.PCG64\nT=0 H0')


def test_simulate_seed_from_environment(runner, data_dir, small_workload, tmp_path):
    trace = tmp_path / 'env.trace'
    result = runner.invoke(cxlsim, ['simulate', '--topology', str(data_dir / 'sld_direct.topo'),
                                    '--workload', str(small_workload), '--trace', str(trace)],
                           env={'CXLSIM_SEED': '4'})
    assert result.exit_code == 0, result.output
    assert trace.read_text(encoding='utf-8').startswith('# cxlsim seed=4 ')


def test_simulate_repeat(runner, data_dir, small_workload, tmp_path):
    result = runner.invoke(cxlsim, ['simulate', '--topology', str(data_dir / 'sld_direct.topo'),
                                    '--workload', str(small_workload), '--flit', '256',
                                    '--repeat', '2', '--trace', str(tmp_path / 'run.trace')])
    assert result.exit_code == 0, result.output
    assert result.output.split()[:5] == ['seed', 'metric', 'scope', 'value', 'unit']
    assert (tmp_path / 'run.seed0.trace').exists()
    assert (tmp_path / 'run.seed1.trace').exists()


def test_simulate_errors(runner, data_dir, tmp_path):
    topology = str(data_dir / 'sld_direct.topo')
    bad = tmp_path / 'bad.yaml'
    bad.write_text('workloads:\n  - {host: H0, device: D0, colour: blue}\n', encoding='utf-8')

    result = runner.invoke(cxlsim, ['simulate', '--topology', topology, '--workload', str(bad)])
    assert result.exit_code == 1
    assert result.output.startswith('ERROR ***')

    assert runner.invoke(cxlsim, ['simulate']).exit_code == 2
    assert runner.invoke(cxlsim, ['simulate', '--topology', topology,
                                  '--flit', '512']).exit_code == 2


# EXPLORE
# =======
def test_explore_clean(runner, data_dir):
    result = runner.invoke(cxlsim, ['explore', '--config', str(data_dir / 'explore.yaml'),
                                    '--depth', '3'])
    assert result.exit_code == 0, result.output
    assert 'no violations' in result.output


def test_explore_negative_control(runner, data_dir):
    result = runner.invoke(cxlsim, ['explore', '--config',
                                    str(data_dir / 'explore_no_go_push.yaml'), '--depth', '6'])
    assert result.exit_code == 1
    assert 'VIOLATION' in result.output
