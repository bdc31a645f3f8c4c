"""CXLSim CXL.io Transmit Queues."""


import logging
from sys import version_info
from typing import Dict, List, Optional, Set   # Py3.9+: use generic types

from numpy.random import Generator, default_rng

from ..protocol.channels import FlowControlClass
from .ordering import IoTlp, OrderingMode, OrderingVerdict, may_pass

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = 'IoOrderingQueue', 'make_vc_queues'


logger = logging.getLogger(__name__)


class IoOrderingQueue:
    """One VC's transmit queue.

    The head goes first unless its FC class is out of credits.  A later TLP
    goes ahead of earlier ones only where every earlier TLP allows it:
    MUST_ALLOW_PASS cells always do when the head is blocked; MAY_PASS cells do
    with probability `pass_probability` drawn from the seeded generator.
    """

    def __init__(self, vc: int = 0, mode: Optional[OrderingMode] = None,
                 pass_probability: float = 0.0, rng: Optional[Generator] = None):
        assert 0.0 <= pass_probability <= 1.0, \
            ValueError(f'*** MAY_PASS PROBABILITY {pass_probability} ***')
        self.vc: int = vc
        self.mode: OrderingMode = mode or OrderingMode.for_vc(vc)
        self.pass_probability: float = pass_probability
        self.rng: Generator = rng if rng is not None else default_rng(0)

        self.entries: List[IoTlp] = []
        self.blocked: Set[FlowControlClass] = set()
        self.passes: int = 0

    def push(self, tlp: IoTlp):
        assert tlp.vc == self.vc, ValueError(f'*** VC{tlp.vc} TLP ON VC{self.vc} QUEUE ***')
        self.entries.append(tlp)

    def __len__(self) -> int:
        return len(self.entries)

    def block(self, fc: FlowControlClass):
        self.blocked.add(fc)

    def unblock(self, fc: FlowControlClass):
        self.blocked.discard(fc)

    def _may_overtake(self, j: int, head_stuck: bool) -> bool:
        for earlier in self.entries[:j]:
            verdict = may_pass(earlier, self.entries[j], self.mode)
            if verdict is OrderingVerdict.MUST_NOT_PASS:
                return False
            if verdict is OrderingVerdict.MUST_ALLOW_PASS and head_stuck:
                continue
            if not self.rng.random() < self.pass_probability:
                return False
        return True

    def pop(self) -> Optional[IoTlp]:
        """Next TLP to transmit, or None when nothing may go."""
        if not self.entries:
            return None

        head_stuck = self.entries[0].fc in self.blocked
        if not head_stuck and self.pass_probability == 0.0:
            return self.entries.pop(0)

        for j in range(1, len(self.entries)):
            if self.entries[j].fc not in self.blocked and self._may_overtake(j, head_stuck):
                self.passes += 1
                logger.debug('VC%d: %s passes %d earlier TLP(s)',
                             self.vc, self.entries[j].kind.value, j)
                return self.entries.pop(j)

        return None if head_stuck else self.entries.pop(0)


def make_vc_queues(n_vcs: int = 2, pass_probability: float = 0.0,
                   rng: Optional[Generator] = None) -> Dict[int, IoOrderingQueue]:
    """VC0 (traditional ordering) plus UIO VCs; CXL.io links carry at least two."""
    assert 2 <= n_vcs <= 8, ValueError(f'*** {n_vcs} VCs ***')
    rng = rng if rng is not None else default_rng(0)
    return {vc: IoOrderingQueue(vc=vc, pass_probability=pass_probability, rng=rng)
            for vc in range(n_vcs)}
