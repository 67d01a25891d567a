"""Network-level aggregation: availability, throughput, onboard buffer and cloud correlation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSeries, InvariantViolation, NoOverlap, OutOfSpan, SpecMismatch
from .linkbudget import LinkEnvironment, NoiseSpec, TerminalSpec, capacity_array
from .timeutil import month_bounds, month_keys
from .weather import DEFAULT_CADENCE, WeatherSeries


# ---------------------------------------------------------------------------
# common tick grid

def common_span(series) -> tuple[float, float]:
    if not series:
        raise NoOverlap("no weather series given")
    start = max(s.span[0] for s in series)
    end = min(s.span[1] for s in series)
    if not start < end:
        raise NoOverlap("weather series share no common time span")
    return start, end


def align(series, cadence: float = DEFAULT_CADENCE, span=None):
    """Step-hold every series onto one tick grid. Returns (ticks, cloud[n_stations, n_ticks])."""
    start, end = common_span(series) if span is None else span
    if cadence <= 0:
        raise ValueError("cadence must be positive")
    n = int(math.ceil((end - start) / cadence))
    ticks = start + cadence * np.arange(n, dtype=float)
    try:
        cloud = np.vstack([s.cloud_at(ticks) for s in series])
    except OutOfSpan as exc:
        raise NoOverlap(str(exc)) from None
    return ticks, cloud


def complete_months(start: float, end: float) -> list[str]:
    keys = []
    first, last = month_keys([start, end])
    key = str(first)
    while True:
        lo, hi = month_bounds(key)
        if lo >= end:
            break
        if lo >= start and hi <= end:
            keys.append(key)
        if key == str(last):
            break
        key = str(month_keys([hi])[0])
    return keys


# ---------------------------------------------------------------------------
# availability

@dataclass(frozen=True, eq=False)
class AvailabilityReport:
    threshold: float
    times: np.ndarray
    available: np.ndarray  # bool per tick
    per_month: tuple[tuple[str, float], ...]  # complete months only, percent
    overall: float | None  # mean of the monthly values; None without a complete month
    per_station: tuple[tuple[str, float], ...]  # single-site availability, percent

    @property
    def outage_pct(self) -> float:
        return 100.0 * (1.0 - float(self.available.mean()))

    @property
    def tick_availability_pct(self) -> float:
        return 100.0 * float(self.available.mean())


def availability_series(weather, threshold: float, cadence: float = DEFAULT_CADENCE,
                        span=None) -> AvailabilityReport:
    """Network availability: a tick is available when any station is below the cloud threshold."""
    weather = list(weather)
    ticks, cloud = align(weather, cadence, span)
    clear = cloud < threshold
    avail = clear.any(axis=0)
    start, end = common_span(weather) if span is None else span
    keys = month_keys(ticks)
    per_month = []
    for key in complete_months(start, end):
        sel = keys == key
        if sel.any():
            per_month.append((key, 100.0 * float(avail[sel].mean())))
    overall = float(np.mean([v for _, v in per_month])) if per_month else None
    per_station = tuple((s.station_id, 100.0 * float(c.mean())) for s, c in zip(weather, clear))
    avail.setflags(write=False)
    return AvailabilityReport(threshold, ticks, avail, tuple(per_month), overall, per_station)


# ---------------------------------------------------------------------------
# throughput

@dataclass(frozen=True)
class StationLink:
    """Everything needed to turn one station's passes into data rates."""

    station_id: str
    passes: tuple
    weather: WeatherSeries
    terminal: TerminalSpec
    env: LinkEnvironment


@dataclass(frozen=True)
class PassThroughput:
    pass_id: str
    station_id: str
    aos: float
    los: float
    rate: float  # credited time-mean rate C_i, bit/s
    bits: float


@dataclass(frozen=True)
class ThroughputSummary:
    total_bits: float
    max_bits: float
    per_month: tuple[tuple[str, float], ...]  # by AOS month
    per_pass: tuple[PassThroughput, ...]

    @property
    def pdt(self) -> float | None:
        return 100.0 * self.total_bits / self.max_bits if self.max_bits > 0 else None

    def normalized_pdt(self, reference_max: float) -> float | None:
        return 100.0 * self.total_bits / reference_max if reference_max > 0 else None


def sample_rates(link: StationLink, noise: NoiseSpec, c_max: float) -> list[np.ndarray]:
    """Per-sample rate for each pass: Shannon capacity capped at c_max, zero under blocking cloud."""
    env = link.env
    if link.weather.turbulence is not None:
        env = replace(env, turbulence=link.weather.turbulence)
    out = []
    for p in link.passes:
        try:
            cloud = link.weather.cloud_at(p.times)
        except OutOfSpan:
            raise SpecMismatch(f"weather for {link.station_id} does not cover pass {p.pass_id}") from None
        cap = capacity_array(link.terminal, noise, env, p.elevation, p.slant_range, cloud)
        out.append(np.minimum(cap, c_max))
    return out


def exclusive_rates(passes_by_station, rates_by_station):
    """Credit only the best station at each sample instant; ties go to the earlier station.

    Both arguments are lists ordered by station catalog position, holding per-pass
    sample arrays. A rival's rate at a foreign sample time is linearly interpolated.
    """
    flat = [(si, pi, p) for si, ps in enumerate(passes_by_station) for pi, p in enumerate(ps)]
    flat.sort(key=lambda x: x[2].aos)
    credited = [[r.copy() for r in rs] for rs in rates_by_station]
    active = []
    for si, pi, p in flat:
        active = [a for a in active if a[2].los > p.aos]
        for sj, pj, q in active:
            if sj == si:
                continue
            for (sa, pa, pa_pass), (sb, pb, pb_pass) in (((si, pi, p), (sj, pj, q)), ((sj, pj, q), (si, pi, p))):
                t = pa_pass.times
                inside = (t >= pb_pass.aos) & (t <= pb_pass.los)
                if not inside.any():
                    continue
                mine = rates_by_station[sa][pa][inside]
                rival = np.interp(t[inside], pb_pass.times, rates_by_station[sb][pb])
                lose = (rival > mine) | ((rival == mine) & (sb < sa) & (rival > 0))
                idx = np.flatnonzero(inside)[lose]
                credited[sa][pa][idx] = 0.0
        active.append((si, pi, p))
    return credited


def _trapezoid(y: np.ndarray, t: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def throughput_from_rates(passes, rates, c_max: float) -> ThroughputSummary:
    """Aggregate per-sample rates into per-pass volumes, totals and the ideal-conditions bound."""
    rows = []
    max_bits = 0.0
    for p, r in zip(passes, rates):
        bits = _trapezoid(np.asarray(r, float), p.times)
        rows.append(PassThroughput(p.pass_id, p.station_id, p.aos, p.los,
                                   bits / p.duration if p.duration > 0 else 0.0, bits))
        max_bits += c_max * p.duration
    rows.sort(key=lambda x: (x.aos, x.station_id))
    monthly: dict[str, float] = {}
    if rows:
        for key, row in zip(month_keys([x.aos for x in rows]), rows):
            monthly[str(key)] = monthly.get(str(key), 0.0) + row.bits
    total = math.fsum(x.bits for x in rows)
    return ThroughputSummary(total, max_bits, tuple(sorted(monthly.items())), tuple(rows))


def throughput(links, noise: NoiseSpec, c_max: float, exclusive: bool = True) -> ThroughputSummary:
    links = list(links)
    if c_max <= 0:
        raise ValueError("c_max must be positive")
    rates = [sample_rates(link, noise, c_max) for link in links]
    passes = [list(link.passes) for link in links]
    if exclusive:
        rates = exclusive_rates(passes, rates)
    flat_p = [p for ps in passes for p in ps]
    flat_r = [r for rs in rates for r in rs]
    return throughput_from_rates(flat_p, flat_r, c_max)


# ---------------------------------------------------------------------------
# onboard buffer

@dataclass(frozen=True)
class BufferState:
    capacity: int
    fill: int
    generation_rate: float
    generated_total: int
    downlinked_total: int
    lost_total: int

    def __post_init__(self):
        if not 0 <= self.fill <= self.capacity:
            raise ValueError("buffer fill outside [0, capacity]")


@dataclass(frozen=True, eq=False)
class BufferResult:
    final: BufferState
    times: np.ndarray
    fill: np.ndarray  # int64 bits
    lost_total: np.ndarray


class _Cumulative:
    """Integer bit counter of a piecewise-constant rate: floor of the integral, never decreasing."""

    def __init__(self, edges, rates):
        self.edges = np.asarray(edges, float)
        self.rates = np.asarray(rates, float)
        self.acc = np.concatenate([[0.0], np.cumsum(self.rates[:-1] * np.diff(self.edges))])
        self.last = 0

    def __call__(self, t: float) -> int:
        i = int(np.searchsorted(self.edges, t, side="right") - 1)
        value = math.floor(self.acc[i] + self.rates[i] * (t - self.edges[i]))
        self.last = max(self.last, int(value))
        return self.last


def buffer_simulate(contacts, generation_rate: float, capacity: float, span) -> BufferResult:
    """Event-driven store-and-forward buffer with integer bit accounting.

    ``contacts`` is an iterable of (start, end, downlink_rate_bps). Between events the
    fill changes linearly; generated and offered downlink volumes are floors of their
    exact cumulative integrals, so conservation holds exactly in integers.
    """
    start, end = (float(x) for x in span)
    capacity = int(capacity)
    if capacity <= 0 or generation_rate < 0:
        raise ValueError("capacity must be positive and generation rate non-negative")
    contacts = [(max(float(a), start), min(float(b), end), float(r)) for a, b, r in contacts
                if float(b) > start and float(a) < end and float(b) > float(a)]
    if any(r < 0 for _, _, r in contacts):
        raise ValueError("downlink rates must be non-negative")
    edges = sorted({start, end, *(a for a, _, _ in contacts), *(b for _, b, _ in contacts)})
    dl_rates = []
    for a in edges:
        dl_rates.append(sum(r for lo, hi, r in contacts if lo <= a < hi))
    gen = _Cumulative([start, end], [generation_rate, generation_rate])
    dl = _Cumulative(edges, dl_rates)

    fill = generated = downlinked = lost = 0
    times, fills, losts = [start], [0], [0]

    def step(t0, t1):
        nonlocal fill, generated, downlinked, lost
        g0, d0 = gen.last, dl.last
        g = gen(t1) - g0
        d = dl(t1) - d0
        generated += g
        if g >= d:
            downlinked += d
            fill += g - d
            if fill > capacity:
                lost += fill - capacity
                fill = capacity
        else:
            sent = min(d, fill + g)
            downlinked += sent
            fill += g - sent
        times.append(t1)
        fills.append(fill)
        losts.append(lost)

    for i in range(len(edges) - 1):
        t0, t1 = edges[i], edges[i + 1]
        net = generation_rate - dl_rates[i]
        # split where the buffer saturates or empties so the trajectory stays exact
        if net > 0 and fill < capacity:
            tc = t0 + (capacity - fill) / net
            if tc < t1:
                step(t0, tc)
                t0 = tc
        elif net < 0 and fill > 0:
            tc = t0 + fill / -net
            if tc < t1:
                step(t0, tc)
                t0 = tc
        step(t0, t1)

    final = BufferState(capacity, fill, generation_rate, generated, downlinked, lost)
    if generated != downlinked + lost + fill:
        raise InvariantViolation("buffer conservation broken")
    return BufferResult(final, np.asarray(times), np.asarray(fills, np.int64), np.asarray(losts, np.int64))


def contacts_from_throughput(summary: ThroughputSummary):
    return [(x.aos, x.los, x.rate) for x in summary.per_pass if x.bits > 0]


# ---------------------------------------------------------------------------
# correlation

@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    station_ids: tuple[str, ...]
    r: np.ndarray  # NaN where a series is constant


def pearson_cloud_correlation(series, cadence: float = DEFAULT_CADENCE, strict: bool = False) -> CorrelationMatrix:
    series = list(series)
    if len(series) < 2:
        raise ValueError("correlation needs at least two stations")
    _, x = align(series, cadence)
    dev = x - x.mean(axis=1, keepdims=True)
    norm = np.sqrt(np.einsum("ij,ij->i", dev, dev))
    flat = norm == 0
    if strict and flat.any():
        bad = [s.station_id for s, f in zip(series, flat) if f]
        raise DegenerateSeries(f"zero-variance cloud series: {', '.join(bad)}")
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (dev @ dev.T) / np.outer(norm, norm)
    r = np.clip(r, -1.0, 1.0)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, np.where(flat, np.nan, 1.0))
    r[flat, :] = np.nan
    r[:, flat] = np.nan
    r.setflags(write=False)
    return CorrelationMatrix(tuple(s.station_id for s in series), r)
