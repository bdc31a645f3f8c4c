"""CXLSim Protocol Core: messages, channels & the dependence graph."""


from sys import version_info

from .address import (Address, CACHE_ID_BITS, LD_ID_BITS, LINE_BYTES, MAX_LDS,
                      MAX_PIDS, PID_BITS, TAG_BITS, line_data, line_value)
from .channels import CACHEMEM_CHANNELS, Channel, FlowControlClass, Protocol
from .dependence import (AcyclicityVerdict, DependenceConfig, DependenceGraph,
                         build_dependence_graph, check_acyclic, enumerate_cycles)
from .fields import CacheState, DevLoad, MetaField
from .message import Message, classify_message
from .opcodes import (D2HCategory, D2HData, D2HReq, D2HRsp, H2DData, H2DReq,
                      H2DRsp, IoOpcode, M2SBIRsp, M2SReq, M2SRwD, Opcode,
                      ProtocolLevel, S2MBISnp, S2MDRS, S2MNDR, d2h_category,
                      opcode_channel, opcodes_for_level)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Address', 'CACHE_ID_BITS', 'LD_ID_BITS', 'LINE_BYTES', 'MAX_LDS', 'MAX_PIDS',
    'PID_BITS', 'TAG_BITS', 'line_data', 'line_value',
    'CACHEMEM_CHANNELS', 'Channel', 'FlowControlClass', 'Protocol',
    'AcyclicityVerdict', 'DependenceConfig', 'DependenceGraph',
    'build_dependence_graph', 'check_acyclic', 'enumerate_cycles',
    'CacheState', 'DevLoad', 'MetaField',
    'Message', 'classify_message',
    'D2HCategory', 'D2HData', 'D2HReq', 'D2HRsp', 'H2DData', 'H2DReq', 'H2DRsp',
    'IoOpcode', 'M2SBIRsp', 'M2SReq', 'M2SRwD', 'Opcode', 'ProtocolLevel',
    'S2MBISnp', 'S2MDRS', 'S2MNDR', 'd2h_category', 'opcode_channel',
    'opcodes_for_level',
)
