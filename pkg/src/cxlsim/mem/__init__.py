"""CXLSim CXL.mem Agents: HDM regions, devices, directories & Back-Invalidate."""


from sys import version_info

from .device import (Bias, META_ANY, META_INVALID, META_SHARED, MemDevice, MemLine,
                     bi_snoop, mem_read, mem_write, snoop_filter_eviction)
from .directory import Directory, DirectoryEntry, DirectoryMonitor, DirState
from .domain import Link, MemDomain, bias_flip, run_random_workload
from .host import HostMemAgent
from .region import (DeviceAttr, HdmDecoder, HdmKind, HdmRegion, HostDecoderSet,
                     check_disjoint, format_devattr, parse_devattr)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Bias', 'META_ANY', 'META_INVALID', 'META_SHARED', 'MemDevice', 'MemLine',
    'bi_snoop', 'mem_read', 'mem_write', 'snoop_filter_eviction',
    'Directory', 'DirectoryEntry', 'DirectoryMonitor', 'DirState',
    'Link', 'MemDomain', 'bias_flip', 'run_random_workload',
    'HostMemAgent',
    'DeviceAttr', 'HdmDecoder', 'HdmKind', 'HdmRegion', 'HostDecoderSet',
    'check_disjoint', 'format_devattr', 'parse_devattr',
)
