"""CXLSim UIO / Back-Invalidate Link-Efficiency Trade-off.

Bytes (in DW) moved for a device access over the existing host-mediated flow
versus direct UIO with Back-Invalidate snoops for a fraction `x` of lines.
CXL.io DW carry a 10% FEC/CRC/DLLP overhead; M2S/S2M slots are 16 bytes
(4 DW) with one slot in 15 spent on FEC/CRC/Hdr.
"""


from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from sys import version_info
from typing import Tuple, Union   # Py3.9+: use generic types

from ..errors import DomainError
from .bandwidth import MixKind

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'UIO_BI_PAYLOADS',
    'FlowCost',
    'flow_costs',
    'uio_bi_tradeoff',
)


UIO_BI_PAYLOADS: Sequence[int] = (1, 4, 8, 16, 24, 32, 64, 128)

IO_OVERHEAD: Fraction = Fraction(11, 10)
SLOT_DW: int = 4
SLOT_OVERHEAD: Fraction = Fraction(15, 14)

_F = Fraction


@dataclass(frozen=True)
class FlowCost:
    io_in: Fraction
    io_out: Fraction
    m2s_slots: Fraction
    s2m_slots: Fraction

    @property
    def total_dw(self) -> Fraction:
        return ((self.io_in + self.io_out) * IO_OVERHEAD +
                (self.m2s_slots + self.s2m_slots) * SLOT_DW * SLOT_OVERHEAD)


def _check(a: int, b: int, c: int, d: int, x: Union[float, Fraction]):
    if min(a, b, c) < 1:
        raise DomainError(f'HOP COUNTS MUST BE >= 1, GOT a={a} b={b} c={c}', a=a, b=b, c=c)
    if d < 1:
        raise DomainError(f'PAYLOAD MUST BE >= 1 DW, GOT {d}', d=d)
    if not 0 <= x <= 1:
        raise DomainError(f'BI-SNOOP FRACTION {x} OUTSIDE [0, 1]', x=x)


def flow_costs(a: int, b: int, c: int, d: int, x: Union[float, Fraction],
               mix: MixKind) -> Tuple[FlowCost, FlowCost]:
    """(existing flow, BI flow) costs of one access."""
    _check(a, b, c, d, x)
    x, lines = _F(x), ceil(d / 16)

    if mix is MixKind.IO_READ:
        existing = FlowCost(io_in=_F(5 * a), io_out=_F((4 + d) * a),
                            m2s_slots=_F(b * lines),            # 1 request per slot
                            s2m_slots=_F(5 * b * lines))        # data header + 4 data
        with_bi = FlowCost(io_in=_F(5 * c), io_out=_F((4 + d) * c),
                           m2s_slots=x / 3 * c * lines,         # 3 BIRsp per slot
                           s2m_slots=x * c * lines)             # BISnp
        return existing, with_bi

    if mix is MixKind.IO_WRITE:
        existing = FlowCost(io_in=_F((5 + d) * a), io_out=_F(4 * a),
                            m2s_slots=_F(6 * b * lines),        # read + write request, 4 data
                            s2m_slots=_F(14, 3) * b * lines)    # DRS + data, NDR
        with_bi = FlowCost(io_in=_F((5 + d) * c), io_out=_F(4 * c),
                           m2s_slots=_F(16, 3) * x * c * lines,  # request, 1/3 BIRsp, 4 data
                           s2m_slots=x * c * lines)             # BISnp + NDR in one slot
        return existing, with_bi

    raise DomainError(f'{mix.value} HAS NO UIO/BI FLOW', mix=mix)


def uio_bi_tradeoff(a: int, b: int, c: int, d: int, x: Union[float, Fraction],
                    mix: MixKind) -> Fraction:
    """Existing-flow DW divided by BI-flow DW (above 1 favours UIO/BI)."""
    existing, with_bi = flow_costs(a=a, b=b, c=c, d=d, x=x, mix=mix)
    return existing.total_dw / with_bi.total_dw
