"""CXLSim Inter-Switch Links.

An ISL port carries all 12 CXL.cache and CXL.mem channels in both directions,
each with its own link-layer credit pool.
"""


from dataclasses import dataclass, field
from enum import Enum
from sys import version_info
from typing import Dict, Tuple   # Py3.9+: use generic types

from ..protocol.channels import CACHEMEM_CHANNELS, Channel

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'IslDirection', 'CreditPool', 'IslPort'


class IslDirection(Enum):
    UPSTREAM = 'up'
    DOWNSTREAM = 'down'


@dataclass
class CreditPool:
    limit: int
    available: int = -1

    def __post_init__(self):
        assert self.limit > 0, ValueError(f'*** CREDIT LIMIT {self.limit} ***')
        if self.available < 0:
            self.available = self.limit

    def take(self) -> bool:
        if not self.available:
            return False
        self.available -= 1
        return True

    def give(self):
        assert self.available < self.limit, ValueError('*** CREDIT RETURNED TWICE ***')
        self.available += 1


@dataclass
class IslPort:
    switch: str
    port: int
    credits: int = 16
    pools: Dict[Tuple[IslDirection, Channel], CreditPool] = field(default_factory=dict)

    def __post_init__(self):
        for direction in IslDirection:
            for channel in CACHEMEM_CHANNELS:
                self.pools[(direction, channel)] = CreditPool(limit=self.credits)

    def pool(self, direction: IslDirection, channel: Channel) -> CreditPool:
        try:
            return self.pools[(direction, channel)]
        except KeyError as err:
            raise ValueError(f'*** {channel.name} IS NOT CARRIED ON AN ISL ***') from err

    def send(self, direction: IslDirection, channel: Channel) -> bool:
        """Take one credit; False when the channel's pool is dry."""
        return self.pool(direction, channel).take()

    def credit_return(self, direction: IslDirection, channel: Channel):
        self.pool(direction, channel).give()

    def channels(self, direction: IslDirection) -> Tuple[Channel, ...]:
        return tuple(sorted((c for d, c in self.pools if d is direction), key=lambda c: c.name))
