"""Exhaustive interleaving exploration of a small CXL.cache domain."""


import pytest

from cxlsim.errors import ConfigError, StateSpaceBudgetExceeded
from cxlsim.sim.explore import explore, explore_domain
from cxlsim.util.config import ExploreConfig, load_explore_config


@pytest.mark.slow
def test_protocol_holds_for_every_short_schedule():
    report = explore_domain(n_devices=2, lines=1,
                            alphabet=('RdShared', 'RdOwn', 'DirtyEvict', 'SnpInv'), depth=8)
    assert report.ok, report.render()
    assert report.states > 1
    assert report.deepest == 8
    assert 'no violations' in report.render()


@pytest.mark.slow
def test_shipped_domain_holds_at_depth_eight(data_dir):
    config = load_explore_config(data_dir / 'explore.yaml')
    assert config.depth == 8
    report = explore(config)
    assert report.ok, report.render()
    assert report.deepest == 8


@pytest.mark.slow
def test_same_domain_without_go_push_fails_at_depth_eight(data_dir):
    config = load_explore_config(data_dir / 'explore.yaml')
    report = explore_domain(n_devices=config.devices, lines=config.lines,
                            alphabet=config.alphabet, depth=8, go_push=False)
    assert not report.ok
    assert report.violation.startswith('GO-PUSH')


@pytest.mark.slow
def test_stores_and_evictions_keep_data_values():
    report = explore_domain(n_devices=2, lines=1,
                            alphabet=('RdOwn', 'Store', 'DirtyEvict', 'SnpData'), depth=8)
    assert report.ok, report.render()


def test_snoop_overtaking_go_found_without_go_push():
    report = explore_domain(n_devices=2, lines=1, alphabet=('RdOwn', 'SnpInv'), depth=5,
                            go_push=False)
    assert not report.ok
    assert report.violation.startswith('GO-PUSH')
    assert report.witness[-1].startswith('deliver H2D DEV')
    assert 'VIOLATION GO-PUSH' in report.render()


def test_shipped_negative_control(data_dir):
    report = explore(load_explore_config(data_dir / 'explore_no_go_push.yaml'), depth=6)
    assert not report.ok


def test_depth_zero_visits_only_the_initial_state():
    report = explore(ExploreConfig(), depth=0)
    assert report.ok
    assert report.states == 1
    assert report.transitions == 0


def test_state_budget():
    with pytest.raises(StateSpaceBudgetExceeded):
        explore_domain(depth=6, max_states=5)


def test_unknown_alphabet_entry():
    with pytest.raises(ConfigError):
        explore_domain(alphabet=('RdEverything',))
