"""CXLSim Error Containment.

Requests to an endpoint that stops answering are completed locally with
poisoned/error responses once the endpoint has been silent for the timeout,
so the requesting host never times out and other virtual hierarchies carry on.
"""


from dataclasses import dataclass, field
import logging
from sys import version_info
from typing import Dict, List, Optional, Set, Tuple   # Py3.9+: use generic types

from ..protocol.channels import Channel, Protocol
from ..protocol.message import Message
from ..protocol.opcodes import IoOpcode, S2MDRS, S2MNDR

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'DEFAULT_CONTAINMENT_TIMEOUT_PS',
    'Outstanding',
    'ErrorContainment',
    'error_completion',
    'contain_error',
)


logger = logging.getLogger(__name__)


DEFAULT_CONTAINMENT_TIMEOUT_PS: int = 1_000_000   # 1 us


@dataclass(frozen=True)
class Outstanding:
    host: str
    endpoint: str
    request: Message
    issued_ps: int


def error_completion(request: Message) -> Message:
    """The poisoned response standing in for the one the endpoint never sent."""
    if request.protocol is Protocol.IO:
        return Message(opcode=IoOpcode.Cpl, tag=request.tag, poison=True)
    if request.channel is Channel.M2S_REQ and request.opcode.value.startswith('MemRd'):
        return Message(opcode=S2MDRS.MemData, address=request.address, tag=request.tag,
                       ld_id=request.ld_id, poison=True)
    return Message(opcode=S2MNDR.Cmp, address=request.address, tag=request.tag,
                   ld_id=request.ld_id, poison=True)


@dataclass
class ErrorContainment:
    """Outstanding requests per host, expired once their endpoint has gone quiet.

    A request is overdue `timeout_ps` after the later of its issue and the last
    response heard from its endpoint, so requests queued behind a busy but
    answering endpoint are never contained.
    """

    timeout_ps: int = DEFAULT_CONTAINMENT_TIMEOUT_PS
    outstanding: Dict[Tuple[str, int], Outstanding] = field(default_factory=dict)
    heard: Dict[str, int] = field(default_factory=dict)
    dead: Set[str] = field(default_factory=set)
    contained: int = 0

    def track(self, host: str, endpoint: str, request: Message, now_ps: int):
        self.outstanding[(host, request.tag)] = Outstanding(host=host, endpoint=endpoint,
                                                            request=request, issued_ps=now_ps)

    def complete(self, host: str, tag: int) -> bool:
        return self.outstanding.pop((host, tag), None) is not None

    def heard_from(self, endpoint: str, now_ps: int):
        self.heard[endpoint] = max(now_ps, self.heard.get(endpoint, now_ps))

    def deadline(self, entry: Outstanding) -> int:
        return max(entry.issued_ps, self.heard.get(entry.endpoint, entry.issued_ps)) + \
            self.timeout_ps

    def next_deadline(self) -> Optional[int]:
        return min((self.deadline(e) for e in self.outstanding.values()), default=None)

    def mark_dead(self, endpoint: str):
        logger.warning('endpoint %s unresponsive', endpoint)
        self.dead.add(endpoint)

    def expire(self, now_ps: int) -> List[Tuple[str, Message]]:
        """(host, synthesized completion) for every request overdue at `now_ps`."""
        out: List[Tuple[str, Message]] = []
        for key, entry in sorted(self.outstanding.items()):
            if now_ps < self.deadline(entry):
                continue
            if entry.endpoint not in self.dead:
                self.mark_dead(entry.endpoint)
            del self.outstanding[key]
            out.append((entry.host, error_completion(entry.request)))

        if out:
            self.contained += len(out)
            logger.warning('contained %d request(s) at %d ps', len(out), now_ps)
        return out


def contain_error(containment: ErrorContainment, now_ps: int) -> List[Tuple[str, Message]]:
    return containment.expire(now_ps)
