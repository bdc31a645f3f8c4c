"""CXLSim Opcodes.

Opcode sets are closed per protocol level: Back-Invalidate opcodes and the
Unordered-I/O CXL.io kinds exist only at CXL 3.0.
"""


from enum import Enum
from sys import version_info
from typing import Dict, FrozenSet, Type, Union   # Py3.9+: use generic types

from .channels import Channel, FlowControlClass

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'ProtocolLevel',
    'D2HCategory',
    'D2HReq', 'D2HRsp', 'D2HData',
    'H2DReq', 'H2DRsp', 'H2DData',
    'M2SReq', 'M2SRwD', 'S2MNDR', 'S2MDRS', 'S2MBISnp', 'M2SBIRsp',
    'IoOpcode',
    'Opcode',
    'NON_NORMATIVE_D2H',
    'd2h_category',
    'opcode_channel',
    'opcodes_for_level',
)


class ProtocolLevel(Enum):
    """CXL protocol generations."""

    CXL_1_1 = '1.1'
    CXL_2_0 = '2.0'
    CXL_3_0 = '3.0'


class D2HCategory(Enum):
    """D2H request categories (legal response pattern per category)."""

    READ = 'Read'                 # GO + Data
    READ0 = 'Read0'               # GO only
    READ0_WRITE = 'Read0-Write'   # WritePull, then GO
    WRITE = 'Write'               # GO_WritePull (evictions)


class D2HReq(Enum):
    """The 15 device-to-host requests."""

    RdCurr = 'RdCurr'
    RdOwn = 'RdOwn'
    RdShared = 'RdShared'
    RdAny = 'RdAny'

    RdOwnNoData = 'RdOwnNoData'
    CLFlush = 'CLFlush'
    CacheFlushed = 'CacheFlushed'

    ItoMWr = 'ItoMWr'
    WrCur = 'WrCur'
    WOWrInv = 'WOWrInv'
    WOWrInvF = 'WOWrInvF'
    WrInv = 'WrInv'

    CleanEvict = 'CleanEvict'
    DirtyEvict = 'DirtyEvict'
    CleanEvictNoData = 'CleanEvictNoData'


class D2HRsp(Enum):
    """Snoop responses: Rsp<final state>Hit<prior state>[Fwd]."""

    RspIHitI = 'RspIHitI'
    RspVHitV = 'RspVHitV'
    RspIHitSE = 'RspIHitSE'
    RspSHitSE = 'RspSHitSE'
    RspSFwdM = 'RspSFwdM'
    RspIFwdM = 'RspIFwdM'
    RspVFwdV = 'RspVFwdV'


class D2HData(Enum):
    Data = 'Data'


class H2DReq(Enum):
    """Host snoops."""

    SnpData = 'SnpData'
    SnpInv = 'SnpInv'
    SnpCur = 'SnpCur'


class H2DRsp(Enum):
    GO = 'GO'
    WritePull = 'WritePull'
    GO_WritePull = 'GO_WritePull'
    GO_Err = 'GO_Err'


class H2DData(Enum):
    Data = 'Data'


class M2SReq(Enum):
    MemRd = 'MemRd'
    MemRdData = 'MemRdData'
    MemInv = 'MemInv'
    MemSpecRd = 'MemSpecRd'
    MemClnEvct = 'MemClnEvct'
    MemRdFwd = 'MemRdFwd'
    MemWrFwd = 'MemWrFwd'


class M2SRwD(Enum):
    MemWr = 'MemWr'
    MemWrPtl = 'MemWrPtl'


class S2MNDR(Enum):
    Cmp = 'Cmp'
    Cmp_S = 'Cmp-S'
    Cmp_E = 'Cmp-E'
    BI_ConflictAck = 'BI-ConflictAck'


class S2MDRS(Enum):
    MemData = 'MemData'


class S2MBISnp(Enum):
    BISnpCur = 'BISnpCur'
    BISnpData = 'BISnpData'
    BISnpInv = 'BISnpInv'


class M2SBIRsp(Enum):
    BIRspI = 'BIRspI'
    BIRspS = 'BIRspS'
    BIRspE = 'BIRspE'


class IoOpcode(Enum):
    """CXL.io transaction kinds named by the ordering tables."""

    MemRd = 'MemRd'
    MemWr = 'MemWr'
    CfgRd = 'CfgRd'
    CfgWr = 'CfgWr'
    IORd = 'IORd'
    IOWr = 'IOWr'
    Cpl = 'Cpl'
    CplD = 'CplD'

    UioWr = 'UioWr'
    UioRd = 'UioRd'
    UioWrCpl = 'UioWrCpl'
    UioRdCpl = 'UioRdCpl'

    @property
    def fc_class(self) -> FlowControlClass:
        return _IO_FC[self]

    @property
    def unordered(self) -> bool:
        return self.name.startswith('Uio')


Opcode = Union[D2HReq, D2HRsp, D2HData, H2DReq, H2DRsp, H2DData,
               M2SReq, M2SRwD, S2MNDR, S2MDRS, S2MBISnp, M2SBIRsp, IoOpcode]


_FAMILY_CHANNEL: Dict[Type[Enum], Channel] = {
    D2HReq: Channel.D2H_REQ,
    D2HRsp: Channel.D2H_RSP,
    D2HData: Channel.D2H_DATA,
    H2DReq: Channel.H2D_REQ,
    H2DRsp: Channel.H2D_RSP,
    H2DData: Channel.H2D_DATA,
    M2SReq: Channel.M2S_REQ,
    M2SRwD: Channel.M2S_RWD,
    S2MNDR: Channel.S2M_NDR,
    S2MDRS: Channel.S2M_DRS,
    S2MBISnp: Channel.S2M_BISNP,
    M2SBIRsp: Channel.M2S_BIRSP,
}

_IO_FC: Dict[IoOpcode, FlowControlClass] = {
    IoOpcode.MemWr: FlowControlClass.P,
    IoOpcode.UioWr: FlowControlClass.P,

    IoOpcode.MemRd: FlowControlClass.NP,
    IoOpcode.CfgRd: FlowControlClass.NP,
    IoOpcode.CfgWr: FlowControlClass.NP,
    IoOpcode.IORd: FlowControlClass.NP,
    IoOpcode.IOWr: FlowControlClass.NP,
    IoOpcode.UioRd: FlowControlClass.NP,

    IoOpcode.Cpl: FlowControlClass.C,
    IoOpcode.CplD: FlowControlClass.C,
    IoOpcode.UioWrCpl: FlowControlClass.C,
    IoOpcode.UioRdCpl: FlowControlClass.C,
}

_D2H_CATEGORIES: Dict[D2HReq, D2HCategory] = {
    **{op: D2HCategory.READ
       for op in (D2HReq.RdCurr, D2HReq.RdOwn, D2HReq.RdShared, D2HReq.RdAny)},
    **{op: D2HCategory.READ0
       for op in (D2HReq.RdOwnNoData, D2HReq.CLFlush, D2HReq.CacheFlushed)},
    **{op: D2HCategory.READ0_WRITE
       for op in (D2HReq.ItoMWr, D2HReq.WrCur, D2HReq.WOWrInv, D2HReq.WOWrInvF,
                  D2HReq.WrInv)},
    **{op: D2HCategory.WRITE
       for op in (D2HReq.CleanEvict, D2HReq.DirtyEvict, D2HReq.CleanEvictNoData)},
}

# D2H opcodes whose behaviour here is an interpretation rather than quoted flow
NON_NORMATIVE_D2H: FrozenSet[D2HReq] = frozenset((
    D2HReq.RdAny, D2HReq.CacheFlushed, D2HReq.ItoMWr, D2HReq.WrCur,
    D2HReq.WOWrInv, D2HReq.WOWrInvF, D2HReq.CleanEvictNoData,
))

_CXL3_ONLY: FrozenSet[Enum] = frozenset((
    *S2MBISnp, *M2SBIRsp, S2MNDR.BI_ConflictAck,
    IoOpcode.UioWr, IoOpcode.UioRd, IoOpcode.UioWrCpl, IoOpcode.UioRdCpl,
))

_ALL_OPCODES: FrozenSet[Enum] = frozenset(
    op for family in (*_FAMILY_CHANNEL, IoOpcode) for op in family)


def d2h_category(opcode: D2HReq) -> D2HCategory:
    """Category of a D2H request opcode."""
    return _D2H_CATEGORIES[opcode]


def opcode_channel(opcode: Opcode) -> Channel:
    """The unique channel carrying an opcode."""
    if isinstance(opcode, IoOpcode):
        return Channel(opcode.fc_class.value)

    return _FAMILY_CHANNEL[type(opcode)]


def opcodes_for_level(level: ProtocolLevel) -> FrozenSet[Enum]:
    """Closed opcode set of a protocol level."""
    if level is ProtocolLevel.CXL_3_0:
        return _ALL_OPCODES

    return _ALL_OPCODES - _CXL3_ONLY
