"""CXLSim Flit Modes & Slot Layouts.

Byte layouts (offsets in bytes):

- F68:    protocol-ID 2 | 4 slots x 16 (slot 0 H or G, slots 1-3 G) | CRC-16 2
- F256:   Hdr 2 | H 16 | G x 14 | FEC 6 | CRC-64 8
- F128LO: even half: Hdr 2 | H 14 | G x 6 | HS 10 | CRC-48 6
          odd half:  G x 7 | reserved 4 | FEC 6 | CRC-48 6
"""


from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from sys import version_info
from typing import Tuple   # Py3.9+: use generic types

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'SLOT_BYTES',
    'FlitMode',
    'SlotKind',
    'FlitLayout',
    'layout_for',
)


SLOT_BYTES: int = 16


class FlitMode(Enum):
    """Negotiated once per link; F68 support is mandatory."""

    F68 = '68'
    F256 = '256'
    F128LO = '128lo'

    @property
    def flit_bytes(self) -> int:
        return 68 if self is FlitMode.F68 else 256

    @property
    def fluid(self) -> bool:
        """Headers may straddle slot boundaries (256B formats)."""
        return self is not FlitMode.F68

    @classmethod
    def parse(cls, text: str) -> 'FlitMode':
        key = text.strip().lower().lstrip('f')
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(f'*** UNKNOWN FLIT MODE {text!r} ***')


class SlotKind(Enum):
    H = 'H'     # header only
    G = 'G'     # header or data
    HS = 'HS'   # 10-byte small-header slot (256B formats only)


@dataclass(frozen=True)
class FlitLayout:
    """Slot grammar of one flit mode."""

    mode: FlitMode
    kinds: Tuple[SlotKind, ...]
    sizes: Tuple[int, ...]
    even_slots: int   # slots carried in the first (even) half; all for F68/F256

    @property
    def slot_count(self) -> int:
        return len(self.kinds)

    @property
    def data_slots(self) -> int:
        return sum(1 for k in self.kinds if k is SlotKind.G)

    def capacity(self, index: int) -> Fraction:
        """Header capacity of a slot in 16-byte slot units."""
        return Fraction(self.sizes[index], SLOT_BYTES)

    @property
    def content_units(self) -> Fraction:
        return sum((self.capacity(i) for i in range(self.slot_count)), Fraction(0))


_LAYOUTS = {
    FlitMode.F68: FlitLayout(mode=FlitMode.F68,
                             kinds=(SlotKind.H,) + (SlotKind.G,) * 3,
                             sizes=(SLOT_BYTES,) * 4,
                             even_slots=4),
    FlitMode.F256: FlitLayout(mode=FlitMode.F256,
                              kinds=(SlotKind.H,) + (SlotKind.G,) * 14,
                              sizes=(SLOT_BYTES,) * 15,
                              even_slots=15),
    FlitMode.F128LO: FlitLayout(mode=FlitMode.F128LO,
                                kinds=((SlotKind.H,) + (SlotKind.G,) * 6 +
                                       (SlotKind.HS,) + (SlotKind.G,) * 7),
                                sizes=(14,) + (SLOT_BYTES,) * 6 + (10,) +
                                      (SLOT_BYTES,) * 7,
                                even_slots=8),
}


def layout_for(mode: FlitMode) -> FlitLayout:
    return _LAYOUTS[mode]
