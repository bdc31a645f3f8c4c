"""CXL.io ordering tables, transmit queues, trace checkers & interleaving explorer."""


import pytest

from cxlsim.errors import MalformedTrace, StateSpaceBudgetExceeded
from cxlsim.io import (PRODUCER_CONSUMER, READ_THEN_WRITE, WRITE_THEN_READ, IoOrderingQueue,
                       IoTlp, OrderingMode, OrderingVerdict, SyncPattern, check_sync_patterns,
                       check_trace, enumerate_outcomes, explore_script, explore_uio_multipath,
                       format_io_trace, make_vc_queues, may_pass, parse_io_trace,
                       uio_source_fence)
from cxlsim.protocol import FlowControlClass, IoOpcode


WR, RD, CPL = IoTlp(IoOpcode.MemWr), IoTlp(IoOpcode.MemRd), IoTlp(IoOpcode.CplD, tag=1)


# ORDERING TABLES
# ===============
@pytest.mark.parametrize('first, second, verdict', [
    (WR, WR, OrderingVerdict.MUST_NOT_PASS),
    (RD, WR, OrderingVerdict.MUST_ALLOW_PASS),
    (WR, RD, OrderingVerdict.MUST_NOT_PASS),
    (WR, CPL, OrderingVerdict.MUST_NOT_PASS),
    (RD, CPL, OrderingVerdict.MUST_ALLOW_PASS),
    (RD, RD, OrderingVerdict.MAY_PASS),
    (CPL, IoTlp(IoOpcode.CplD, tag=1), OrderingVerdict.MUST_NOT_PASS),
    (CPL, IoTlp(IoOpcode.CplD, tag=2), OrderingVerdict.MAY_PASS),
])
def test_legacy_table(first, second, verdict):
    assert may_pass(first, second) is verdict


def test_relaxed_ordering_loosens_posted_order():
    relaxed = IoTlp(IoOpcode.MemWr, relaxed_ordering=True)
    assert may_pass(WR, relaxed) is OrderingVerdict.MAY_PASS
    assert may_pass(CPL, relaxed) is OrderingVerdict.MUST_ALLOW_PASS


def test_uio_table_only_forces_completions_past_requests():
    wr, cpl = IoTlp(IoOpcode.UioWr, vc=1), IoTlp(IoOpcode.UioWrCpl, vc=1)
    assert may_pass(wr, cpl, OrderingMode.UIO) is OrderingVerdict.MUST_ALLOW_PASS
    assert may_pass(wr, wr, OrderingMode.UIO) is OrderingVerdict.MAY_PASS
    assert may_pass(cpl, wr, OrderingMode.UIO) is OrderingVerdict.MAY_PASS


def test_tlp_rules():
    with pytest.raises(AssertionError):
        IoTlp(IoOpcode.UioWr, vc=0)
    with pytest.raises(AssertionError):
        IoTlp(IoOpcode.MemWr, vc=8)
    with pytest.raises(AssertionError):
        may_pass(IoTlp(IoOpcode.MemWr, vc=0), IoTlp(IoOpcode.MemWr, vc=1))
    assert OrderingMode.for_vc(0) is OrderingMode.LEGACY
    assert OrderingMode.for_vc(3) is OrderingMode.UIO


# TRANSMIT QUEUES
# ===============
def test_queue_is_fifo_without_blocking():
    queue = IoOrderingQueue()
    for tlp in (WR, RD, CPL):
        queue.push(tlp)
    assert [queue.pop() for _ in range(3)] == [WR, RD, CPL]
    assert queue.pop() is None


def test_posted_write_passes_a_blocked_read():
    queue = IoOrderingQueue()
    queue.push(RD)
    queue.push(WR)
    queue.block(FlowControlClass.NP)
    assert queue.pop() == WR
    assert queue.passes == 1
    assert queue.pop() is None
    queue.unblock(FlowControlClass.NP)
    assert queue.pop() == RD


def test_read_never_passes_a_blocked_write():
    queue = IoOrderingQueue()
    queue.push(WR)
    queue.push(RD)
    queue.block(FlowControlClass.P)
    assert queue.pop() is None


def test_uio_completion_passes_blocked_request():
    queue = IoOrderingQueue(vc=1)
    cpl = IoTlp(IoOpcode.UioWrCpl, vc=1)
    queue.push(IoTlp(IoOpcode.UioWr, vc=1))
    queue.push(cpl)
    queue.block(FlowControlClass.P)
    assert queue.mode is OrderingMode.UIO
    assert queue.pop() == cpl


def test_vc_queues():
    queues = make_vc_queues(n_vcs=3)
    assert [q.mode for q in queues.values()] == [OrderingMode.LEGACY, OrderingMode.UIO,
                                                 OrderingMode.UIO]
    with pytest.raises(AssertionError):
        queues[0].push(IoTlp(IoOpcode.UioWr, vc=1))
    with pytest.raises(AssertionError):
        make_vc_queues(n_vcs=1)


# TRACES
# ======
def test_shipped_traces(data_dir):
    ok = parse_io_trace((data_dir / 'producer_consumer.trace').read_text(encoding='utf-8'))
    stale = parse_io_trace((data_dir / 'producer_consumer_stale.trace')
                           .read_text(encoding='utf-8'))
    assert check_trace(ok) == []
    violations = check_trace(stale)
    assert len(violations) == 1
    assert violations[0].startswith('40 DEV1 RD data 0: stale after observing flag=1')


def test_trace_text_round_trip():
    trace = parse_io_trace('MODE uio\nINIT x 0\n# comment\n5 A WR x 1\n1 B RD x 0\n')
    assert trace.mode is OrderingMode.UIO
    assert [e.t for e in trace.events] == [1, 5]
    assert parse_io_trace(format_io_trace(trace)) == trace


@pytest.mark.parametrize('text', ['MODE strict', '1 A XX x 1', 'x A WR x 1'])
def test_malformed_traces(text):
    with pytest.raises(MalformedTrace):
        parse_io_trace(text)


def test_read_of_a_value_never_written():
    trace = parse_io_trace('INIT x 0\n1 B WR x 1\n2 B WR y 1\n3 A RD y 1\n4 A RD x 7\n')
    with pytest.raises(MalformedTrace):
        check_trace(trace)


def test_program_order_overrides_visibility_order():
    # the flag became visible first, but the producer issued the payload first
    text = 'INIT d 0\nINIT f 0\n1 P WR f 1 1\n2 C RD f 1\n3 C RD d 0\n4 P WR d 1 0\n'
    trace = parse_io_trace(text)
    assert [e.seq for e in trace.program_order('P')] == [0, 1]
    assert len(check_trace(trace)) == 1
    in_order = text.replace(' 1 1\n', ' 1\n').replace(' 1 0\n', ' 1\n')
    assert check_trace(parse_io_trace(in_order)) == []


_CROSSING = '''MODE {mode}
INIT a 0
INIT b 0
1 X {x1}
2 Y {y1}
3 X {x2}
4 Y {y2}
'''


def test_write_then_read_both_old_is_legacy_violation():
    text = _CROSSING.format(mode='legacy', x1='WR a 1', y1='WR b 1', x2='RD b 0', y2='RD a 0')
    report = check_sync_patterns(parse_io_trace(text))
    assert report.pattern is SyncPattern.WRITE_THEN_READ
    assert report.outcome == ('0', '0')
    assert not report.acceptable

    uio = check_sync_patterns(parse_io_trace(text.replace('legacy', 'uio')))
    assert uio.acceptable


def test_read_then_write_is_always_acceptable():
    text = _CROSSING.format(mode='legacy', x1='RD b 0', y1='RD a 0', x2='WR a 1', y2='WR b 1')
    report = check_sync_patterns(parse_io_trace(text))
    assert report.pattern is SyncPattern.READ_THEN_WRITE
    assert report.acceptable
    assert str(report) == 'read-then-write outcome (0, 0): ok'


def test_sync_reads_must_cross():
    text = _CROSSING.format(mode='legacy', x1='WR a 1', y1='WR b 1', x2='RD a 1', y2='RD b 1')
    with pytest.raises(MalformedTrace):
        check_sync_patterns(parse_io_trace(text))


# EXPLORER
# ========
def test_legacy_producer_consumer_never_reads_stale_data():
    report = explore_script(PRODUCER_CONSUMER)
    assert report.outcome_set == {('f', 'd'), ('f', "d'"), ("f'", "d'")}
    assert report.violations == []


def test_uio_single_path_reorders_writes():
    assert ("f'", 'd') in enumerate_outcomes(PRODUCER_CONSUMER, mode=OrderingMode.UIO)


def test_uio_multipath_needs_the_source_fence():
    unfenced = explore_uio_multipath(fence=False)
    assert ("f'", 'd') in unfenced.outcome_set
    assert unfenced.violations

    fenced = explore_uio_multipath(fence=True)
    assert ("f'", 'd') not in fenced.outcome_set
    assert fenced.violations == []


def test_legacy_write_then_read_forbids_both_old():
    assert ('a', 'b') not in enumerate_outcomes(WRITE_THEN_READ)
    uio = explore_script(WRITE_THEN_READ, mode=OrderingMode.UIO)
    assert ('a', 'b') in uio.outcome_set
    assert uio.violations == []


def test_legacy_read_then_write_allows_both_new():
    report = explore_script(READ_THEN_WRITE)
    assert ("a'", "b'") in report.outcome_set
    assert report.violations == []


def test_explorer_budget_and_fence_helper():
    with pytest.raises(StateSpaceBudgetExceeded):
        explore_script(PRODUCER_CONSUMER, max_states=3)
    assert uio_source_fence('P', set())
    assert not uio_source_fence('P', {(0, 0)})
