"""CXLSim Errors."""


from sys import version_info
from typing import Any, Optional

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'CxlSimError',

    'ProtocolError', 'UnknownOpcode',

    'FlitError', 'SlotGrammarViolation', 'CrcMismatch', 'Uncorrectable',

    'CoherenceError', 'AddressBusy', 'IllegalStateForEvict', 'SnoopFilterFull',
    'PermissionDenied',

    'MemAgentError', 'OutOfRange', 'RegionOverlap', 'HostTimeout',

    'OrderingError', 'MalformedTrace',

    'FabricError', 'PortAlreadyBound', 'UnknownEntity', 'HostUncooperative',
    'NoRoute', 'NoFastSegment', 'UnmappedId', 'TopologyParseError',

    'PerfError', 'DomainError',

    'SimError', 'MonitorViolation', 'Deadlock', 'StateSpaceBudgetExceeded',

    'ConfigError',
)


class CxlSimError(Exception):
    """Base of all CXLSim errors."""

    def __init__(self, msg: str, **details: Any):
        super().__init__(f'*** {msg} ***')
        self.details: dict = details


# PROTOCOL
# ========
class ProtocolError(CxlSimError):
    """Protocol vocabulary error."""


class UnknownOpcode(ProtocolError):
    """Opcode outside the configured protocol level."""


# FLITS
# =====
class FlitError(CxlSimError):
    """Link-layer flit error."""


class SlotGrammarViolation(FlitError):
    """Slot kinds/counts do not match the flit mode's grammar."""


class CrcMismatch(FlitError):
    """CRC check failed (half index set for latency-optimized flits)."""

    def __init__(self, msg: str, half: Optional[int] = None, **details: Any):
        super().__init__(msg, half=half, **details)
        self.half: Optional[int] = half


class Uncorrectable(FlitError):
    """No protocol-ID codeword within correction radius."""


# CXL.cache
# =========
class CoherenceError(CxlSimError):
    """CXL.cache agent error."""


class AddressBusy(CoherenceError):
    """Device already has an outstanding request for the line."""


class IllegalStateForEvict(CoherenceError):
    """Eviction opcode does not match the line's state."""


class SnoopFilterFull(CoherenceError):
    """Snoop filter has no free entry."""


class PermissionDenied(CoherenceError):
    """Line is not permitted to use CXL.cache."""


# CXL.mem
# =======
class MemAgentError(CxlSimError):
    """CXL.mem agent error."""


class OutOfRange(MemAgentError):
    """Address outside every HDM region of the device."""


class RegionOverlap(MemAgentError):
    """HDM regions overlap in host physical address space."""


class HostTimeout(MemAgentError):
    """Host did not answer a Back-Invalidate snoop in time."""


# CXL.io
# ======
class OrderingError(CxlSimError):
    """CXL.io ordering error."""


class MalformedTrace(OrderingError):
    """Trace does not follow the line format or script."""


# FABRIC
# ======
class FabricError(CxlSimError):
    """Switch fabric error."""


class PortAlreadyBound(FabricError):
    """Physical port (or LD) already bound to a vPPB."""


class UnknownEntity(FabricError):
    """Command references a non-existent switch, port, vPPB or device."""


class HostUncooperative(FabricError):
    """Host did not acknowledge a managed unbind."""


class NoRoute(FabricError):
    """No egress port for the message."""


class NoFastSegment(FabricError):
    """Address outside the Fabric Address Segment Table."""


class UnmappedId(FabricError):
    """LD-ID / CacheID / PID without a table entry."""


class TopologyParseError(FabricError):
    """Malformed topology or FM script line."""


# PERFORMANCE MODEL
# =================
class PerfError(CxlSimError):
    """Performance-model error."""


class DomainError(PerfError):
    """Parameter outside the model's domain."""


# SIMULATION
# ==========
class SimError(CxlSimError):
    """Simulation error."""


class MonitorViolation(SimError):
    """An invariant monitor failed; `prefix` holds the offending event prefix."""

    def __init__(self, msg: str, prefix: Sequence[str] = (), **details: Any):
        super().__init__(msg, **details)
        self.prefix: Sequence[str] = tuple(prefix)


class Deadlock(SimError):
    """No events remain while requests are outstanding."""


class StateSpaceBudgetExceeded(SimError):
    """Exhaustive exploration exceeded its state budget."""


# CONFIGURATION
# =============
class ConfigError(CxlSimError):
    """Invalid configuration."""
