"""CXLSim Flit CRCs.

- F68: CRC-16/CCITT (x^16 + x^12 + x^5 + 1), Hamming distance 4 over the
  512-bit payload
- F256: CRC-64 (ECMA-182 generator)
- F128LO: 48 bits per half, formed by two independent CRC-24s
  (OpenPGP and FlexRay generators) since crcmod only builds 8/16/24/32/64-bit CRCs
"""


from sys import version_info

import crcmod

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'crc16', 'crc48', 'crc64'


crc16 = crcmod.mkCrcFun(0x11021, initCrc=0xFFFF, rev=False, xorOut=0x0000)

crc64 = crcmod.mkCrcFun(0x142F0E1EBA9EA3693, initCrc=0, rev=False,
                        xorOut=0xFFFFFFFFFFFFFFFF)

_crc24_openpgp = crcmod.mkCrcFun(0x1864CFB, initCrc=0xB704CE, rev=False, xorOut=0)
_crc24_flexray = crcmod.mkCrcFun(0x15D6DCB, initCrc=0xFEDCBA, rev=False, xorOut=0)


def crc48(data: bytes) -> int:
    return (_crc24_openpgp(data) << 24) | _crc24_flexray(data)
