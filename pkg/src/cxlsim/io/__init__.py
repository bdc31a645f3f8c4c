"""CXLSim CXL.io Ordering: ordering tables, transmit queues, trace checkers & explorer."""


from sys import version_info

from .explore import (PRODUCER_CONSUMER, READ_THEN_WRITE, SCRIPTS, WRITE_THEN_READ,
                      ExplorationReport, Op, Script, enumerate_outcomes, explore_script,
                      explore_uio_multipath, uio_source_fence)
from .ordering import (LEGACY_TABLE, MAX_VCS, UIO_TABLE, IoTlp, OrderingMode, OrderingVerdict,
                       may_pass)
from .queue import IoOrderingQueue, make_vc_queues
from .trace import (IoEvent, IoTrace, SyncPattern, SyncReport, check_producer_consumer,
                    check_sync_patterns, check_trace, format_io_trace, parse_io_trace)

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'PRODUCER_CONSUMER', 'READ_THEN_WRITE', 'SCRIPTS', 'WRITE_THEN_READ',
    'ExplorationReport', 'Op', 'Script', 'enumerate_outcomes', 'explore_script',
    'explore_uio_multipath', 'uio_source_fence',
    'LEGACY_TABLE', 'MAX_VCS', 'UIO_TABLE', 'IoTlp', 'OrderingMode', 'OrderingVerdict',
    'may_pass',
    'IoOrderingQueue', 'make_vc_queues',
    'IoEvent', 'IoTrace', 'SyncPattern', 'SyncReport', 'check_producer_consumer',
    'check_sync_patterns', 'check_trace', 'format_io_trace', 'parse_io_trace',
)
