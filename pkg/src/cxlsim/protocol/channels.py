"""CXLSim Channels & Flow-Control Classes."""


from enum import Enum
from sys import version_info
from typing import Dict, FrozenSet   # Py3.9+: use generic types

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'Protocol',
    'FlowControlClass',
    'Channel',
    'CACHEMEM_CHANNELS',
)


class Protocol(Enum):
    """The three multiplexed CXL protocols."""

    IO = 'CXL.io'
    CACHE = 'CXL.cache'
    MEM = 'CXL.mem'


class FlowControlClass(Enum):
    """CXL.io flow-control classes: Posted, Non-Posted, Completion."""

    P = 'P'
    NP = 'NP'
    C = 'C'


class Channel(Enum):
    """Protocol-layer channels (one message maps to exactly one)."""

    # CXL.cache
    D2H_REQ = 'D2H_REQ'
    D2H_RSP = 'D2H_RSP'
    D2H_DATA = 'D2H_DATA'
    H2D_REQ = 'H2D_REQ'
    H2D_RSP = 'H2D_RSP'
    H2D_DATA = 'H2D_DATA'

    # CXL.mem
    M2S_REQ = 'M2S_REQ'
    M2S_RWD = 'M2S_RWD'
    S2M_NDR = 'S2M_NDR'
    S2M_DRS = 'S2M_DRS'
    S2M_BISNP = 'S2M_BISNP'
    M2S_BIRSP = 'M2S_BIRSP'

    # CXL.io (per virtual channel)
    IO_P = 'P'
    IO_NP = 'NP'
    IO_C = 'C'

    @property
    def protocol(self) -> Protocol:
        return _PROTOCOLS[self]

    @property
    def data_bearing(self) -> bool:
        return self in _DATA_BEARING

    @property
    def preallocated(self) -> bool:
        """Response channels that always drain (infinite credits)."""
        return self in _PREALLOCATED

    @property
    def upstream(self) -> bool:
        """Device-to-host direction (CXL.io channels flow both ways)."""
        return self in _UPSTREAM

    @property
    def requires_bi(self) -> bool:
        return self in (Channel.S2M_BISNP, Channel.M2S_BIRSP)

    @property
    def fc_class(self) -> 'FlowControlClass':
        assert self.protocol is Protocol.IO, \
            ValueError(f'*** {self.name} HAS NO FLOW-CONTROL CLASS ***')
        return FlowControlClass(self.value)


_PROTOCOLS: Dict[Channel, Protocol] = {
    **{c: Protocol.CACHE
       for c in (Channel.D2H_REQ, Channel.D2H_RSP, Channel.D2H_DATA,
                 Channel.H2D_REQ, Channel.H2D_RSP, Channel.H2D_DATA)},
    **{c: Protocol.MEM
       for c in (Channel.M2S_REQ, Channel.M2S_RWD, Channel.S2M_NDR,
                 Channel.S2M_DRS, Channel.S2M_BISNP, Channel.M2S_BIRSP)},
    **{c: Protocol.IO for c in (Channel.IO_P, Channel.IO_NP, Channel.IO_C)},
}

_DATA_BEARING: FrozenSet[Channel] = frozenset((Channel.D2H_DATA, Channel.H2D_DATA,
                                               Channel.M2S_RWD, Channel.S2M_DRS))

_PREALLOCATED: FrozenSet[Channel] = frozenset((Channel.H2D_RSP, Channel.H2D_DATA,
                                               Channel.S2M_NDR, Channel.S2M_DRS,
                                               Channel.M2S_BIRSP))

_UPSTREAM: FrozenSet[Channel] = frozenset((Channel.D2H_REQ, Channel.D2H_RSP,
                                           Channel.D2H_DATA, Channel.S2M_NDR,
                                           Channel.S2M_DRS, Channel.S2M_BISNP))


# the 12 CXL.cache + CXL.mem channels an inter-switch link carries each way
CACHEMEM_CHANNELS: FrozenSet[Channel] = frozenset(
    c for c in Channel if c.protocol is not Protocol.IO)
