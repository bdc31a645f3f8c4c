"""CXLSim CXL.cache Agents: device caches, the home agent & coherence monitors."""


from sys import version_info

from .device import (Awaiting, DEVICE_TAG_SPACE, DeviceCache, DeviceCacheLine, PendingRequest,
                     device_apply_snoop, device_issue, device_store)
from .domain import CacheDomain, Delivery, Direction, ReadRecord
from .host import HomeAgent, PermissionMap, host_handle_d2h, host_local_access
from .monitor import CoherenceMonitor, Violation
from .ordering import GO_OPCODES, ChannelQueues, H2DChannels, deliver_h2d
from .snoop_filter import HolderState, SnoopFilter, SnoopFilterEntry

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Awaiting', 'DEVICE_TAG_SPACE', 'DeviceCache', 'DeviceCacheLine', 'PendingRequest',
    'device_apply_snoop', 'device_issue', 'device_store',
    'CacheDomain', 'Delivery', 'Direction', 'ReadRecord',
    'HomeAgent', 'PermissionMap', 'host_handle_d2h', 'host_local_access',
    'CoherenceMonitor', 'Violation',
    'GO_OPCODES', 'ChannelQueues', 'H2DChannels', 'deliver_h2d',
    'HolderState', 'SnoopFilter', 'SnoopFilterEntry',
)
