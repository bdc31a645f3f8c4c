"""CXLSim Test Fixtures."""


from pathlib import Path

import pytest

from cxlsim.fabric.topology import Topology, parse_topology
from cxlsim.util import DATA_DIR_PATH


GOLDEN_DIR_PATH: Path = Path(__file__).parent / 'golden'


@pytest.fixture(scope='session')
def data_dir() -> Path:
    return DATA_DIR_PATH


@pytest.fixture(scope='session')
def golden_dir() -> Path:
    return GOLDEN_DIR_PATH


def load_topology(name: str) -> Topology:
    return parse_topology((DATA_DIR_PATH / name).read_text(encoding='utf-8'))


@pytest.fixture
def sld_direct() -> Topology:
    return load_topology('sld_direct.topo')


@pytest.fixture
def switch_topology() -> Topology:
    return load_topology('switch.topo')


@pytest.fixture
def cxl3_fabric() -> Topology:
    return load_topology('cxl3_fabric.topo')
