"""Greedy slot packer."""


from fractions import Fraction

import pytest

from cxlsim.flit import FlitMode, SlotPacker, header_cost, pack_slots_greedy
from cxlsim.flit.codec import FlitHeader, decode_flit, encode_flit
from cxlsim.flit.protocol_id import ProtocolIdKind
from cxlsim.protocol import Address, Channel, M2SBIRsp, M2SReq, Message, S2MDRS, S2MNDR


def _rd(tag: int = 0) -> Message:
    return Message(opcode=M2SReq.MemRd, address=Address.of_line(tag), tag=tag)


def _data(tag: int = 0) -> Message:
    return Message(opcode=S2MDRS.MemData, tag=tag)


def _ndr(tag: int = 0) -> Message:
    return Message(opcode=S2MNDR.Cmp, tag=tag)


def test_68b_one_request_per_slot():
    packed = pack_slots_greedy({Channel.M2S_REQ: [_rd(0), _rd(1)]}, FlitMode.F68)
    # with no data owed every slot is a header slot
    assert packed.slot_contents[0] == [('hdr', _rd(0))]
    assert packed.slot_contents[1] == [('hdr', _rd(1))]
    assert packed.completed == [_rd(0), _rd(1)]


def test_68b_four_requests_per_flit():
    packed = pack_slots_greedy({Channel.M2S_REQ: [_rd(t) for t in range(6)]}, FlitMode.F68)
    assert packed.completed == [_rd(t) for t in range(4)]


def test_68b_small_headers_leave_in_arrival_order():
    packer = SlotPacker(FlitMode.F68)
    packer.push(_ndr(0))
    packer.push(_data(1))
    packer.push(_ndr(2))
    packed = packer.pack()
    assert packed.slot_contents[0] == [('hdr', _ndr(0)), ('hdr', _data(1))]
    assert packed.completed == [_ndr(0)]
    assert packed.data_slots == 3


def test_256b_completion_passes_header_held_by_full_window():
    packer = SlotPacker(FlitMode.F256)
    for t in range(5):
        packer.owe(_data(t))
    packer.push(_data(10))
    packer.push(_ndr(11))
    packed = packer.pack()
    assert packed.slot_contents[0] == [('hdr', _ndr(11))]
    assert _ndr(11) in packed.completed
    assert packed.data_slots == 14
    assert list(packer.queues[Channel.S2M_DRS]) == [_data(10)]


def test_68b_data_follows_its_header_then_all_data_flit():
    packer = SlotPacker(FlitMode.F68)
    packer.push(_data(0))
    packer.push(_data(1))

    first = packer.pack()
    assert [what for what, _ in first.slot_contents[0]] == ['hdr', 'hdr']
    assert first.data_slots == 3
    assert not first.completed

    second = packer.pack()
    assert second.all_data
    assert second.completed == [_data(0)]

    third = packer.pack()
    assert third.completed == [_data(1)]
    assert not packer.pending


def test_68b_small_headers_fill_the_header_slot():
    pending = {Channel.M2S_REQ: [_rd()],
               Channel.M2S_BIRSP: [Message(opcode=M2SBIRsp.BIRspI, tag=t) for t in range(3)]}
    packed = pack_slots_greedy(pending, FlitMode.F68)
    # a request (3/4) leaves room for none of the 1/3-slot BIRsps
    assert len(packed.slot_contents[0]) == 1
    assert len(packed.slot_contents[1]) == 3


def test_null_flit_when_nothing_pending():
    packed = SlotPacker(FlitMode.F256).pack()
    assert packed.is_null
    assert not packed.completed


def test_256b_requests_fill_every_slot():
    packed = pack_slots_greedy({Channel.M2S_REQ: [_rd(t) for t in range(20)]}, FlitMode.F256)
    assert len(packed.completed) == 15


def test_lo_headers_straddle_slots():
    packed = pack_slots_greedy({Channel.M2S_REQ: [_rd(0)]}, FlitMode.F128LO)
    # 14-byte slot 0 cannot hold a whole request header
    assert packed.slot_contents[0] == [('hdr', _rd(0))]
    assert packed.slot_contents[1] == [('hdr', _rd(0))]
    assert packed.completed == [_rd(0)]


def test_lo_small_header_slot_skips_requests():
    packer = SlotPacker(FlitMode.F128LO)
    for t in range(30):
        packer.push(_rd(t))
    packed = packer.pack()
    assert packed.slot_contents[7] == []


@pytest.mark.parametrize('mode, fraction', [
    (FlitMode.F256, Fraction(14, 16)),
    (FlitMode.F128LO, Fraction(13, 16)),
])
def test_pure_data_stream_slot_fraction(mode, fraction):
    packer = SlotPacker(mode)
    for t in range(400):
        packer.owe(_data(t))
    data_slots = 0
    for _ in range(100):
        data_slots += packer.pack().data_slots
    # 16 slot-equivalents per flit once Hdr, CRC and FEC are counted
    assert Fraction(data_slots, 100 * 16) == fraction


def test_header_cost_table():
    assert header_cost(FlitMode.F68, Channel.M2S_REQ) == Fraction(3, 4)
    assert header_cost(FlitMode.F256, Channel.M2S_REQ) == 1
    assert header_cost(FlitMode.F128LO, Channel.S2M_NDR,
                       Message(opcode=S2MNDR.Cmp_E)) > header_cost(FlitMode.F128LO,
                                                                   Channel.S2M_NDR)


def test_misqueued_message_rejected():
    with pytest.raises(AssertionError):
        pack_slots_greedy({Channel.M2S_RWD: [_rd()]}, FlitMode.F68)


@pytest.mark.parametrize('mode', list(FlitMode))
def test_packed_flit_renders_into_codec_slots(mode):
    packer = SlotPacker(mode)
    for t in range(6):
        packer.push(_data(t))
        packer.push(_rd(t))
    for _ in range(4):
        packed = packer.pack()
        image = encode_flit(mode, FlitHeader(kind=ProtocolIdKind.CACHEMEM), packed.to_slots())
        assert len(decode_flit(mode, image, slot0_is_data=packed.all_data).slots) == \
            len(packed.slot_contents)
