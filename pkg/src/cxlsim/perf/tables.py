"""CXLSim Performance Tables.

Tables are pandas DataFrames whose cells are preformatted strings (half-up
rounding), so text and CSV renderings are byte-stable.
"""


from fractions import Fraction
from sys import version_info
from typing import Callable, Dict, List, Optional   # Py3.9+: use generic types

import pandas
from tabulate import tabulate

from ..errors import DomainError
from ..flit.modes import FlitMode
from ..util import round_half_up
from .bandwidth import (CACHE_MIXES, IO_MIXES, MEM_MIXES, MixKind, TrafficMix,
                        cache_bandwidth, io_bandwidth, mem_bandwidth)
from .latency import CANNED_PATHS, end_to_end_adder, latency_estimate, switch_latency_adder
from .link import ClockMode, LinkConfig, LinkProtocol, link_efficiency
from .uio_bi import UIO_BI_PAYLOADS, uio_bi_tradeoff

if version_info >= (3, 9):
    from collections.abc import Sequence
else:
    from typing import Sequence   # pylint: disable=ungrouped-imports


__all__: Sequence[str] = (
    'TABLE_NAMES',
    'IO_PAYLOADS',
    'build_table',
    'render_table',
)


IO_PAYLOADS: Sequence[int] = (1, 4, 16, 64, 256, 1024)

_MIX_LABELS: Dict[MixKind, str] = {
    MixKind.IO_READ: 'read', MixKind.IO_WRITE: 'write', MixKind.IO_RW5050: 'rw5050',
    MixKind.MEM_1R0W: '1R0W', MixKind.MEM_1R1W: '1R1W', MixKind.MEM_2R1W: '2R1W',
    MixKind.CACHE_DEVREAD: 'dev-read', MixKind.CACHE_DEVWRITE: 'dev-write',
}


def _link(flit: FlitMode, link: Optional[LinkConfig], **changes) -> LinkConfig:
    base = link or LinkConfig(flit_mode=flit)
    fields = dict(lanes=base.lanes, rate_gts=base.rate_gts, flit_mode=flit,
                  sync_hdr_bypass=base.sync_hdr_bypass, clock_mode=base.clock_mode)
    fields.update(changes)
    return LinkConfig(**fields)


def _io_bw(flit: FlitMode, link: Optional[LinkConfig]) -> pandas.DataFrame:
    cfg = _link(flit, link)
    rows = [{'payload_dw': str(d),
             **{_MIX_LABELS[kind]: round_half_up(io_bandwidth(cfg, TrafficMix(kind=kind,
                                                                               payload_dw=d)))
                for kind in IO_MIXES}}
            for d in IO_PAYLOADS]
    return pandas.DataFrame(rows)


def _mem_bw(flit: FlitMode, link: Optional[LinkConfig]) -> pandas.DataFrame:
    cfg = _link(flit, link)
    rows = []
    for kind in MEM_MIXES:
        row = {'mix': _MIX_LABELS[kind]}
        for device_type in (3, 2):
            m2s, s2m = mem_bandwidth(cfg, TrafficMix(kind=kind, device_type=device_type))
            row[f'type{device_type}_m2s'] = round_half_up(m2s)
            row[f'type{device_type}_s2m'] = round_half_up(s2m)
        rows.append(row)
    return pandas.DataFrame(rows)


def _cache_bw(flit: FlitMode, link: Optional[LinkConfig]) -> pandas.DataFrame:
    rows = []
    for rate in (32, 64):
        cfg = _link(flit, link, rate_gts=rate)
        for kind in CACHE_MIXES:
            rows.append({'mix': _MIX_LABELS[kind], 'link': f'x{cfg.lanes}@{rate}',
                         'gbps': round_half_up(cache_bandwidth(cfg, TrafficMix(kind=kind)))})
    return pandas.DataFrame(rows)


def _latency(flit: FlitMode, link: Optional[LinkConfig]) -> pandas.DataFrame:
    # pylint: disable=unused-argument
    rows = [{'path': name,
             'components': ' + '.join(f'{c.name} {c.ns}' for c in path),
             'ns': str(latency_estimate(path))}
            for name, path in CANNED_PATHS.items()]
    for clock_mode in ClockMode:
        rows.append({'path': f'end-to-end adder ({clock_mode.value} clock)',
                     'components': 'port x2 + retimer',
                     'ns': str(end_to_end_adder(clock_mode))})
        rows.append({'path': f'switch adder ({clock_mode.value} clock)',
                     'components': 'port x2 + arbitration + flight',
                     'ns': str(switch_latency_adder(clock_mode))})
    return pandas.DataFrame(rows)


def _uio_bi(flit: FlitMode, link: Optional[LinkConfig]) -> pandas.DataFrame:
    # pylint: disable=unused-argument
    rows = []
    for kind in (MixKind.IO_READ, MixKind.IO_WRITE):
        for x in (Fraction(1, 10), Fraction(1)):
            row = {'mix': _MIX_LABELS[kind], 'x': round_half_up(x)}
            for d in UIO_BI_PAYLOADS:
                row[str(d)] = round_half_up(uio_bi_tradeoff(a=2, b=2, c=2, d=d, x=x, mix=kind),
                                            ndigits=2)
            rows.append(row)
    return pandas.DataFrame(rows)


def _link_eff(flit: FlitMode, link: Optional[LinkConfig]) -> pandas.DataFrame:
    rows = []
    for protocol in LinkProtocol:
        for bypass in (False, True):
            cfg = _link(flit, link, sync_hdr_bypass=bypass)
            rows.append({'protocol': protocol.value,
                         'sync_hdr': 'off' if bypass else 'on',
                         'efficiency': round_half_up(link_efficiency(cfg, protocol),
                                                     ndigits=3)})
    return pandas.DataFrame(rows)


_BUILDERS: Dict[str, Callable[[FlitMode, Optional[LinkConfig]], pandas.DataFrame]] = {
    'io-bw': _io_bw,
    'mem-bw': _mem_bw,
    'cache-bw': _cache_bw,
    'latency': _latency,
    'uio-bi': _uio_bi,
    'link-eff': _link_eff,
}

TABLE_NAMES: List[str] = list(_BUILDERS)


def build_table(name: str, flit: FlitMode = FlitMode.F68,
                link: Optional[LinkConfig] = None) -> pandas.DataFrame:
    """One performance table for a flit mode (default link x16 @ 32 GT/s)."""
    if name not in _BUILDERS:
        raise DomainError(f'UNKNOWN TABLE {name!r}', table=name)
    return _BUILDERS[name](flit, link)


def render_table(df: pandas.DataFrame, csv: bool = False) -> str:
    """Aligned text (tabulate) or CSV (pandas) rendering."""
    if csv:
        return df.to_csv(index=False)

    return tabulate(df, headers='keys', tablefmt='simple', showindex=False,
                    disable_numparse=True)
