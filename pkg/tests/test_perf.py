"""Analytical performance model: link efficiency, bandwidth, latency, UIO/BI & tables."""


from fractions import Fraction

import pytest

from cxlsim.errors import DomainError
from cxlsim.flit import FlitMode
from cxlsim.perf import (CANNED_PATHS, ClockMode, LinkConfig, LinkProtocol, MixKind, TrafficMix,
                         build_table, cache_bandwidth, end_to_end_adder, flit_time_ps,
                         io_bandwidth, latency_estimate, link_efficiency, mem_bandwidth,
                         raw_bandwidth, render_table, switch_latency_adder, uio_bi_tradeoff)


F68, F256, LO = FlitMode.F68, FlitMode.F256, FlitMode.F128LO


# LINKS
# =====
def test_raw_bandwidth_and_degraded_links():
    assert raw_bandwidth(LinkConfig()) == 64
    assert raw_bandwidth(LinkConfig(lanes=8, rate_gts=64)) == 64
    assert LinkConfig(lanes=2).degraded
    assert not LinkConfig(lanes=4, rate_gts=64).degraded
    with pytest.raises(DomainError):
        LinkConfig(lanes=3)
    with pytest.raises(DomainError):
        LinkConfig(rate_gts=20)


def test_link_efficiency():
    assert float(link_efficiency(LinkConfig(), LinkProtocol.CACHEMEM)) == pytest.approx(0.9387,
                                                                                       abs=1e-4)
    assert link_efficiency(LinkConfig(flit_mode=F256), LinkProtocol.CACHEMEM) == Fraction(15, 16)
    assert link_efficiency(LinkConfig(flit_mode=F256), LinkProtocol.IO) == Fraction(236, 256)
    assert link_efficiency(LinkConfig(flit_mode=LO), LinkProtocol.IO) == Fraction(232, 256)
    with_sync_hdr = LinkConfig(sync_hdr_bypass=False)
    assert link_efficiency(with_sync_hdr, LinkProtocol.IO) < \
        link_efficiency(LinkConfig(), LinkProtocol.IO)


def test_flit_time():
    assert flit_time_ps(LinkConfig()) == 1066
    assert flit_time_ps(LinkConfig(flit_mode=F256)) == 4000
    assert flit_time_ps(LinkConfig(flit_mode=F256, rate_gts=64)) == 2000


# BANDWIDTH
# =========
# published realizable CXL.mem bandwidth, x16 @ 32 GT/s
MEM_REFERENCE = {
    (F68, MixKind.MEM_1R0W): (0, 53.5, 0, 48.1),
    (F68, MixKind.MEM_1R1W): (40.1, 40.1, 40.1, 40.1),
    (F68, MixKind.MEM_2R1W): (25.3, 50.7, 22.9, 45.8),
    (F256, MixKind.MEM_1R0W): (0, 54.0, 0, 50.3),
    (F256, MixKind.MEM_1R1W): (39.9, 39.9, 39.9, 39.9),
    (F256, MixKind.MEM_2R1W): (26.0, 52.1, 24.3, 48.6),
    (LO, MixKind.MEM_1R0W): (0, 51.9, 0, 49.1),
    (LO, MixKind.MEM_1R1W): (39.9, 39.9, 39.9, 39.9),
    (LO, MixKind.MEM_2R1W): (25.4, 50.9, 24.3, 47.5),
}


@pytest.mark.parametrize('mode, kind', sorted(MEM_REFERENCE, key=str))
def test_mem_bandwidth_matches_reference(mode, kind):
    t3_m2s, t3_s2m, t2_m2s, t2_s2m = MEM_REFERENCE[(mode, kind)]
    cfg = LinkConfig(flit_mode=mode)
    m2s, s2m = mem_bandwidth(cfg, TrafficMix(kind=kind, device_type=3))
    assert (float(m2s), float(s2m)) == (pytest.approx(t3_m2s, abs=0.2),
                                        pytest.approx(t3_s2m, abs=0.2))

    m2s, s2m = mem_bandwidth(cfg, TrafficMix(kind=kind, device_type=2))
    if (mode, kind) == (LO, MixKind.MEM_2R1W):
        # 2R1W moves two read lines per written line, so M2S data is exactly half
        # of S2M; the published M2S figure (24.3 against 47.5) breaks that ratio
        assert float(s2m) == pytest.approx(t2_s2m, abs=0.2)
        assert m2s * 2 == s2m
        return
    assert (float(m2s), float(s2m)) == (pytest.approx(t2_m2s, abs=0.2),
                                        pytest.approx(t2_s2m, abs=0.2))


def test_mem_bandwidth_read_only_moves_no_m2s_data():
    m2s, s2m = mem_bandwidth(LinkConfig(), TrafficMix(kind=MixKind.MEM_1R0W))
    assert m2s == 0
    assert s2m == Fraction(8, 9) * link_efficiency(LinkConfig(), LinkProtocol.CACHEMEM) * 64


@pytest.mark.parametrize('mode, rate, kind, expected', [
    (F68, 32, MixKind.CACHE_DEVREAD, 56.6),
    (F68, 32, MixKind.CACHE_DEVWRITE, 40.1),
    (F256, 64, MixKind.CACHE_DEVREAD, 112.0),
    (LO, 64, MixKind.CACHE_DEVREAD, 104.0),
    (F256, 64, MixKind.CACHE_DEVWRITE, 73.8),
    (LO, 64, MixKind.CACHE_DEVWRITE, 73.8),
])
def test_cache_bandwidth_identities(mode, rate, kind, expected):
    cfg = LinkConfig(flit_mode=mode, rate_gts=rate)
    assert float(cache_bandwidth(cfg, TrafficMix(kind=kind))) == pytest.approx(expected, abs=0.1)


# published realizable CXL.io bandwidth (read, write, 50-50), x16 @ 32 GT/s
IO_REFERENCE = {
    F68: {1: (9.8, 8.4, 9.1), 4: (26.2, 23.5, 29.4), 16: (44.9, 42.8, 67.3),
          64: (54.6, 53.8, 99.2), 256: (57.7, 57.5, 112.5), 1024: (58.6, 58.5, 116.4)},
    F256: {1: (14.7, 11.8, 13.1), 4: (33.6, 29.4, 39.2), 16: (49.6, 47.1, 78.5),
           64: (56.2, 55.4, 104.6), 256: (58.2, 57.9, 114.1), 1024: (58.7, 58.6, 116.8)},
    LO: {1: (14.5, 11.6, 12.9), 4: (33.1, 28.9, 38.6), 16: (48.7, 46.3, 77.1),
         64: (55.3, 54.4, 102.8), 256: (57.2, 57.0, 112.2), 1024: (57.7, 57.6, 114.8)},
}


@pytest.mark.parametrize('mode, payload_dw', [(m, d) for m in IO_REFERENCE for d in IO_REFERENCE[m]])
def test_io_bandwidth_within_three_percent(mode, payload_dw):
    cfg = LinkConfig(flit_mode=mode)
    kinds = (MixKind.IO_READ, MixKind.IO_WRITE, MixKind.IO_RW5050)
    for kind, expected in zip(kinds, IO_REFERENCE[mode][payload_dw]):
        got = io_bandwidth(cfg, TrafficMix(kind=kind, payload_dw=payload_dw))
        assert float(got) == pytest.approx(expected, rel=0.03)


@pytest.mark.parametrize('mode, kind, overhead_dw', [
    (F68, MixKind.IO_READ, 5), (F68, MixKind.IO_WRITE, 6),
    (F256, MixKind.IO_READ, 3), (F256, MixKind.IO_WRITE, 4),
])
def test_io_bandwidth_per_tlp_overhead(mode, kind, overhead_dw):
    cfg = LinkConfig(flit_mode=mode)
    scale = link_efficiency(cfg, LinkProtocol.IO) * raw_bandwidth(cfg)
    got = io_bandwidth(cfg, TrafficMix(kind=kind, payload_dw=64))
    assert got == Fraction(64, 64 + overhead_dw) * scale


def test_io_bandwidth_rw_mix_bound_by_host_to_device():
    cfg = LinkConfig(flit_mode=F256)
    scale = link_efficiency(cfg, LinkProtocol.IO) * raw_bandwidth(cfg)
    got = io_bandwidth(cfg, TrafficMix(kind=MixKind.IO_RW5050, payload_dw=16))
    assert got == Fraction(32, 16 + 8) * scale


def test_mix_domains():
    with pytest.raises(DomainError):
        TrafficMix(kind=MixKind.IO_READ, payload_dw=0)
    with pytest.raises(DomainError):
        TrafficMix(kind=MixKind.IO_READ, payload_dw=2048)
    with pytest.raises(DomainError):
        TrafficMix(kind=MixKind.MEM_1R0W, device_type=1)
    with pytest.raises(DomainError):
        mem_bandwidth(LinkConfig(), TrafficMix(kind=MixKind.CACHE_DEVREAD))
    with pytest.raises(DomainError):
        cache_bandwidth(LinkConfig(), TrafficMix(kind=MixKind.MEM_1R0W))
    with pytest.raises(DomainError):
        io_bandwidth(LinkConfig(), TrafficMix(kind=MixKind.MEM_1R0W))


# LATENCY
# =======
@pytest.mark.parametrize('name, ns', [('direct-type3', 170), ('switched-type3', 250),
                                      ('peer-one-switch', 220), ('peer-two-switches', 270)])
def test_canned_latency_paths(name, ns):
    assert latency_estimate(CANNED_PATHS[name]) == ns


def test_latency_adders():
    assert end_to_end_adder() == 57
    assert end_to_end_adder(ClockMode.INDEPENDENT) == 65
    assert switch_latency_adder() == 62


# UIO / BACK-INVALIDATE TRADE-OFF
# ===============================
UIO_BI_REFERENCE = {
    (MixKind.IO_READ, Fraction(1, 10)): (3.17, 2.69, 2.30, 1.89, 2.34, 2.08, 2.21, 2.29),
    (MixKind.IO_WRITE, Fraction(1, 10)): (4.13, 3.52, 3.00, 2.42, 3.06, 2.70, 2.88, 2.99),
    (MixKind.IO_WRITE, Fraction(1)): (1.49, 1.45, 1.41, 1.34, 1.41, 1.37, 1.39, 1.40),
}


@pytest.mark.parametrize('mix, x', sorted(UIO_BI_REFERENCE, key=str))
def test_uio_bi_tradeoff(mix, x):
    for d, expected in zip((1, 4, 8, 16, 24, 32, 64, 128), UIO_BI_REFERENCE[(mix, x)]):
        got = uio_bi_tradeoff(a=2, b=2, c=2, d=d, x=x, mix=mix)
        assert float(got) == pytest.approx(expected, abs=0.02)


@pytest.mark.parametrize('d, ratio', [(1, Fraction(257, 117)), (16, Fraction(149, 93)),
                                      (128, Fraction(24949, 13749))])
def test_uio_bi_read_with_every_line_snooped(d, ratio):
    # the BI flow drops the host's data slots even when every line needs a BISnp
    assert uio_bi_tradeoff(a=2, b=2, c=2, d=d, x=1, mix=MixKind.IO_READ) == ratio


@pytest.mark.parametrize('kwargs', [dict(a=0), dict(d=0), dict(x=1.5),
                                    dict(mix=MixKind.MEM_1R0W)])
def test_uio_bi_domain(kwargs):
    args = dict(a=2, b=2, c=2, d=16, x=0.1, mix=MixKind.IO_READ)
    args.update(kwargs)
    with pytest.raises(DomainError):
        uio_bi_tradeoff(**args)


# TABLES
# ======
@pytest.mark.parametrize('name, mode', [('mem-bw', F68), ('cache-bw', F256), ('link-eff', F68),
                                        ('latency', F68)])
def test_tables_match_golden_csv(golden_dir, name, mode):
    expected = (golden_dir / f'{name}_{mode.value}.csv').read_text(encoding='utf-8')
    assert render_table(build_table(name, flit=mode), csv=True) == expected


def test_text_tables():
    text = render_table(build_table('io-bw', flit=F256))
    header = text.splitlines()[0].split()
    assert header == ['payload_dw', 'read', 'write', 'rw5050']
    assert len(text.splitlines()) == 2 + 6
    assert len(build_table('uio-bi')) == 4
    with pytest.raises(DomainError):
        build_table('nope')
