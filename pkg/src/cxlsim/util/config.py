"""CXLSim Configuration.

Simulation knobs, workloads and model-checker settings are pydantic models
read from YAML files; `.env` files supply `CXLSIM_SEED` / `CXLSIM_LOG_LEVEL`.
"""


import os
from pathlib import Path
from sys import version_info
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar, Union   # Py3.9+: use generic types

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from ..errors import ConfigError
from ..fabric.devload import DevLoadParams
from ..flit.modes import FlitMode

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'SEED_ENV_VAR', 'LOG_LEVEL_ENV_VAR',
    'load_env', 'default_seed', 'default_log_level',
    'SimConfig',
    'ScriptStep', 'HostWorkload', 'FailureSpec', 'TimedCommand', 'WorkloadConfig',
    'ExploreConfig',
    'read_yaml', 'parse_model', 'as_dict',
    'load_workload', 'load_explore_config',
)


SEED_ENV_VAR: str = 'CXLSIM_SEED'
LOG_LEVEL_ENV_VAR: str = 'CXLSIM_LOG_LEVEL'


# ENVIRONMENT
# ===========
def load_env(path: Optional[Union[str, Path]] = None) -> bool:
    """Load a `.env` file (never overriding variables already set)."""
    return load_dotenv(dotenv_path=path, override=False)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR, '0')
    try:
        return int(raw)
    except ValueError as err:
        raise ConfigError(f'{SEED_ENV_VAR}={raw!r} IS NOT AN INTEGER', value=raw) from err


def default_log_level() -> str:
    return os.environ.get(LOG_LEVEL_ENV_VAR, 'WARNING')


# MODELS
# ======
class _Model(BaseModel):
    class Config:   # pylint: disable=too-few-public-methods
        extra = 'forbid'


class SimConfig(_Model):
    """Engine constants; every latency is in nanoseconds."""

    flit_mode: str = '68'
    sync_hdr_bypass: bool = True

    # request-channel headers a link direction holds waiting for slots
    credits: int = Field(16, ge=1)
    # requests a host keeps in flight
    max_outstanding: int = Field(512, ge=1)

    media_latency_ns: int = Field(80, ge=0)
    switch_latency_ns: int = Field(20, ge=0)
    flight_ns: int = Field(10, ge=0)
    # chance a flit is received damaged and replayed
    flit_error_rate: float = Field(0.0, ge=0, lt=1)

    sf_capacity: int = Field(4096, ge=1)

    devload_enabled: bool = False
    devload_severe: float = Field(0.5, gt=0, le=1)
    devload_moderate: float = Field(0.8, gt=0, le=1)
    devload_light: float = Field(1.1, ge=1)
    devload_nominal_rate: float = Field(100.0, gt=0)   # requests per microsecond
    # requests in the media pipeline that count as full utilisation
    devload_capacity: int = Field(256, ge=1)

    containment_timeout_ns: int = Field(1000, ge=1)

    # share of each link direction's active span cut at both ends for steady-state rates
    steady_trim: float = Field(0.1, ge=0, lt=0.5)

    @property
    def mode(self) -> FlitMode:
        try:
            return FlitMode.parse(self.flit_mode)
        except (KeyError, ValueError) as err:
            raise ConfigError(f'UNKNOWN FLIT MODE {self.flit_mode!r}',
                              flit_mode=self.flit_mode) from err

    def devload_params(self) -> DevLoadParams:
        return DevLoadParams(severe=self.devload_severe, moderate=self.devload_moderate,
                             light=self.devload_light, nominal_rate=self.devload_nominal_rate)


class ScriptStep(_Model):
    at_ns: int = Field(0, ge=0)
    op: Literal['read', 'read_shared', 'read_excl', 'write', 'store', 'evict']
    line: int = Field(0, ge=0)   # line index inside the target region
    value: int = 0


class HostWorkload(_Model):
    host: str
    device: str
    ld: Optional[int] = Field(None, ge=0)

    kind: Literal['fixed-mix', 'script'] = 'fixed-mix'

    # fixed-mix: cache lines to move, optionally cut short after `duration_ns`
    mix: str = 'MEM_1R0W'
    lines: int = Field(0, ge=0)
    duration_ns: Optional[int] = Field(None, ge=0)
    start_ns: int = Field(0, ge=0)

    steps: List[ScriptStep] = Field(default_factory=list)


class FailureSpec(_Model):
    device: str
    at_ns: int = Field(0, ge=0)


class TimedCommand(_Model):
    at_ns: int = Field(0, ge=0)
    command: str


class WorkloadConfig(_Model):
    workloads: List[HostWorkload] = Field(default_factory=list)
    fm: List[TimedCommand] = Field(default_factory=list)
    fail: Optional[FailureSpec] = None
    monitors: List[str] = Field(default_factory=lambda: ['directory', 'conservation'])
    sim: SimConfig = Field(default_factory=SimConfig)


class ExploreConfig(_Model):
    devices: int = Field(2, ge=1, le=3)
    lines: int = Field(1, ge=1, le=2)
    alphabet: List[str] = Field(default_factory=lambda: ['RdShared', 'RdOwn',
                                                         'DirtyEvict', 'SnpInv'])
    depth: int = Field(8, ge=0)
    max_states: int = Field(1_000_000, ge=1)
    go_push: bool = True
    sf_capacity: int = Field(4096, ge=1)


# LOADING
# =======
_M = TypeVar('_M', bound=BaseModel)


def read_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, encoding='utf-8') as f:
            data = YAML(typ='safe').load(f)
    except (OSError, YAMLError) as err:
        raise ConfigError(f'CANNOT READ {path}: {err}', path=str(path)) from err

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f'{path}: TOP LEVEL MUST BE A MAPPING', path=str(path))
    return data


def parse_model(cls: Type[_M], data: Dict[str, Any], source: str = '<config>') -> _M:
    try:
        return cls(**data)
    except ValidationError as err:
        raise ConfigError(f'{source}: {cls.__name__} INVALID: {err}', source=source) from err


def as_dict(model: BaseModel) -> Dict[str, Any]:
    """Plain-dict view under pydantic 1 or 2."""
    dump = getattr(model, 'model_dump', None)
    return dump() if dump is not None else model.dict()


def load_workload(path: Union[str, Path]) -> WorkloadConfig:
    return parse_model(WorkloadConfig, read_yaml(path), source=str(path))


def load_explore_config(path: Union[str, Path]) -> ExploreConfig:
    return parse_model(ExploreConfig, read_yaml(path), source=str(path))
