"""CXLSim CXL.io Ordering Rules.

Tables are indexed (passing transaction, transaction being passed): the row is
the later TLP, the column the earlier one.  VC0 follows the traditional
producer-consumer rules; UIO VCs are unordered except that completions must
always be able to pass requests.
"""


from dataclasses import dataclass
from enum import Enum
from sys import version_info
from typing import Callable, Dict, Tuple   # Py3.9+: use generic types

from ..protocol.channels import FlowControlClass
from ..protocol.opcodes import IoOpcode

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'MAX_VCS',
    'OrderingMode',
    'OrderingVerdict',
    'IoTlp',
    'may_pass',
    'LEGACY_TABLE',
    'UIO_TABLE',
)


MAX_VCS: int = 8

_P, _NP, _C = FlowControlClass.P, FlowControlClass.NP, FlowControlClass.C


class OrderingMode(Enum):
    LEGACY = 'legacy'
    UIO = 'uio'

    @classmethod
    def for_vc(cls, vc: int) -> 'OrderingMode':
        return cls.LEGACY if vc == 0 else cls.UIO


class OrderingVerdict(Enum):
    MUST_NOT_PASS = 'No'
    MUST_ALLOW_PASS = 'Yes'
    MAY_PASS = 'Y/N'


@dataclass(frozen=True)
class IoTlp:
    kind: IoOpcode
    relaxed_ordering: bool = False
    vc: int = 0
    payload_dw: int = 0
    tag: int = 0
    address: int = 0

    def __post_init__(self):
        assert 0 <= self.vc < MAX_VCS, ValueError(f'*** VC {self.vc} ***')
        assert not self.kind.unordered or self.vc >= 1, \
            ValueError(f'*** {self.kind.value} ON VC0: UIO NEEDS VC1..VC7 ***')
        assert 0 <= self.payload_dw <= 1024, ValueError(f'*** PAYLOAD {self.payload_dw} DW ***')

    @property
    def fc(self) -> FlowControlClass:
        return self.kind.fc_class


_Cell = Callable[[IoTlp, IoTlp], OrderingVerdict]


def _const(verdict: OrderingVerdict) -> _Cell:
    return lambda first, second: verdict


def _relaxed(unset: OrderingVerdict, when_set: OrderingVerdict) -> _Cell:
    """a/b cell split by the passing TLP's relaxed-ordering attribute."""
    return lambda first, second: when_set if second.relaxed_ordering else unset


def _same_tag_keeps_order(first: IoTlp, second: IoTlp) -> OrderingVerdict:
    # completions of one request (same transaction tag) stay in order
    return OrderingVerdict.MUST_NOT_PASS if first.tag == second.tag \
        else OrderingVerdict.MAY_PASS


_NO, _YES, _YN = (OrderingVerdict.MUST_NOT_PASS, OrderingVerdict.MUST_ALLOW_PASS,
                  OrderingVerdict.MAY_PASS)

# (second, first) -> cell
LEGACY_TABLE: Dict[Tuple[FlowControlClass, FlowControlClass], _Cell] = {
    (_P, _P): _relaxed(_NO, _YN),
    (_P, _NP): _const(_YES),
    (_P, _C): _relaxed(_YN, _YES),

    (_NP, _P): _relaxed(_NO, _YN),
    (_NP, _NP): _const(_YN),
    (_NP, _C): _const(_YN),

    (_C, _P): _relaxed(_NO, _YN),
    (_C, _NP): _const(_YES),
    (_C, _C): _same_tag_keeps_order,
}

UIO_TABLE: Dict[Tuple[FlowControlClass, FlowControlClass], _Cell] = {
    (second, first): _const(_YES if second is _C and first is not _C else _YN)
    for second in (_P, _NP, _C) for first in (_P, _NP, _C)
}


def may_pass(first: IoTlp, second: IoTlp,
             mode: OrderingMode = OrderingMode.LEGACY) -> OrderingVerdict:
    """Whether `second` (sent later) may overtake `first` on the same VC."""
    assert first.vc == second.vc, \
        ValueError(f'*** ORDERING ONLY APPLIES WITHIN A VC ({first.vc} vs {second.vc}) ***')
    table = LEGACY_TABLE if mode is OrderingMode.LEGACY else UIO_TABLE
    return table[(second.fc, first.fc)](first, second)
