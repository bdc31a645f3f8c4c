"""Protocol core: channels, messages & the dependence graph."""


import pytest

from cxlsim.errors import UnknownOpcode
from cxlsim.protocol import (CACHEMEM_CHANNELS, Address, Channel, DependenceConfig,
                             DependenceGraph, D2HCategory, D2HReq, FlowControlClass,
                             IoOpcode, M2SBIRsp, M2SReq, M2SRwD, Message, ProtocolLevel,
                             S2MBISnp, S2MDRS, S2MNDR, build_dependence_graph,
                             check_acyclic, classify_message, d2h_category,
                             enumerate_cycles, line_data, line_value, opcodes_for_level)


def test_every_opcode_has_exactly_one_channel():
    for op in opcodes_for_level(ProtocolLevel.CXL_3_0):
        assert isinstance(Message(opcode=op, payload_dw=1 if op is IoOpcode.UioRdCpl else 0)
                          .channel, Channel)


def test_cachemem_channels_are_twelve():
    assert len(CACHEMEM_CHANNELS) == 12
    assert Channel.IO_P not in CACHEMEM_CHANNELS


@pytest.mark.parametrize('opcode, channel, fc_class', [
    (M2SReq.MemRd, Channel.M2S_REQ, None),
    (M2SRwD.MemWr, Channel.M2S_RWD, None),
    (S2MDRS.MemData, Channel.S2M_DRS, None),
    (S2MBISnp.BISnpInv, Channel.S2M_BISNP, None),
    (IoOpcode.MemWr, Channel.IO_P, FlowControlClass.P),
    (IoOpcode.CfgWr, Channel.IO_NP, FlowControlClass.NP),
    (IoOpcode.CplD, Channel.IO_C, FlowControlClass.C),
    (IoOpcode.UioWr, Channel.IO_P, FlowControlClass.P),
])
def test_classify_message(opcode, channel, fc_class):
    assert classify_message(Message(opcode=opcode)) == (channel, fc_class)


def test_bi_opcodes_rejected_below_cxl3():
    with pytest.raises(UnknownOpcode):
        classify_message(Message(opcode=S2MBISnp.BISnpData), level=ProtocolLevel.CXL_2_0)
    with pytest.raises(UnknownOpcode):
        classify_message(Message(opcode=M2SBIRsp.BIRspI), level=ProtocolLevel.CXL_1_1)
    assert classify_message(Message(opcode=M2SReq.MemRd),
                            level=ProtocolLevel.CXL_1_1)[0] is Channel.M2S_REQ


def test_has_data_follows_the_channel():
    assert Message(opcode=M2SRwD.MemWr).has_data
    assert not Message(opcode=S2MNDR.Cmp).has_data
    assert Message(opcode=IoOpcode.UioRdCpl, payload_dw=16).has_data
    assert not Message(opcode=IoOpcode.UioRdCpl).has_data
    with pytest.raises(AssertionError):
        Message(opcode=M2SReq.MemRd, has_data=True)


def test_bogus_only_on_d2h_data():
    with pytest.raises(AssertionError):
        Message(opcode=M2SRwD.MemWr, bogus=True)


@pytest.mark.parametrize('field, value', [
    ('tag', 1 << 16),
    ('ld_id', 16),
    ('cache_id', 16),
    ('spid', 1 << 12),
    ('meta', 4),
])
def test_field_widths(field, value):
    with pytest.raises(AssertionError):
        Message(opcode=M2SReq.MemRd, **{field: value})


def test_d2h_categories():
    assert d2h_category(D2HReq.RdOwn) is D2HCategory.READ
    assert d2h_category(D2HReq.CLFlush) is D2HCategory.READ0
    assert d2h_category(D2HReq.WOWrInv) is D2HCategory.READ0_WRITE
    assert d2h_category(D2HReq.DirtyEvict) is D2HCategory.WRITE


def test_address_line_and_data_token():
    address = Address(hpa=0x1234)
    assert address.line == 0x1200
    assert address.line_index == 0x48
    assert Address.of_line(0x48).line == address.line
    assert line_value(line_data(7)) == 7
    assert len(line_data(7)) == 64


@pytest.mark.parametrize('level', list(ProtocolLevel))
def test_dependence_graph_acyclic_at_every_level(level):
    verdict = check_acyclic(build_dependence_graph(DependenceConfig.for_level(level)))
    assert verdict.ok


def test_bi_edges_present_only_with_back_invalidate():
    cxl3 = build_dependence_graph(DependenceConfig.for_level(ProtocolLevel.CXL_3_0))
    cxl2 = build_dependence_graph(DependenceConfig.for_level(ProtocolLevel.CXL_2_0))
    assert ('L3-BISnp', 'L1-Snp') in cxl3
    assert 'L3-BISnp' not in cxl2.nodes


def test_cycle_reported():
    g = DependenceGraph(edges=[('A', 'B'), ('B', 'C'), ('C', 'A'), ('C', 'D')])
    verdict = check_acyclic(g)
    assert not verdict.ok
    assert set(verdict.cycle) == {'A', 'B', 'C'}
    assert len(enumerate_cycles(g)) == 1


def test_bi_requires_mem():
    with pytest.raises(AssertionError):
        DependenceConfig(cache=True, bi=True)
