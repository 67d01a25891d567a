import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ogsnet.analysis import (
    StationLink, align, availability_series, buffer_simulate, complete_months, exclusive_rates,
    pearson_cloud_correlation, throughput, throughput_from_rates,
)
from ogsnet.errors import DegenerateSeries, NoOverlap, SpecMismatch
from ogsnet.linkbudget import LinkEnvironment, NoiseSpec, TerminalSpec
from ogsnet.passes import Pass
from ogsnet.testing.oracles import closed_form_outage_oracle, fine_step_buffer_oracle, pearson_oracle
from ogsnet.timeutil import to_seconds
from ogsnet.weather import WeatherSeries, synth_weather

T0 = to_seconds("2023-06-01T00:00:00Z")
DAY = 86400.0
TERM = TerminalSpec(0.0, 1550e-9, 0.1, 0.4, 0.6, 15e-6, 1e-6)
NOISE = NoiseSpec(500.0, 1e9)
ENV = LinkEnvironment(0.5, 0.0, None, 3.0)


def make_pass(station, number, aos, los, step=10.0, elevation=45.0, slant=7e5):
    grid = np.arange(math.floor(aos / step) * step + step, los, step)
    times = np.concatenate([[aos], grid[grid > aos], [los]])
    n = times.size
    return Pass(station, number, aos, los, times, np.zeros(n), np.full(n, elevation), np.full(n, slant))


def constant_series(sid, value, days=1):
    times = T0 + 900.0 * np.arange(int(days * 96))
    return WeatherSeries(sid, times, np.full(times.size, value), span_end=T0 + days * DAY)


# --- availability ----------------------------------------------------------

def test_single_clear_station():
    rep = availability_series([constant_series("a", 0.0, days=61)], 0.1)
    assert rep.overall == 100.0 and rep.outage_pct == 0.0
    assert [k for k, _ in rep.per_month] == ["2023-06", "2023-07"]


def test_cloudy_station_adds_nothing():
    clear = constant_series("a", 0.0, 40)
    cloudy = constant_series("b", 1.0, 40)
    both = availability_series([clear, cloudy], 0.1)
    alone = availability_series([clear], 0.1)
    assert np.array_equal(both.available, alone.available) and both.overall == alone.overall
    assert dict(both.per_station) == {"a": 100.0, "b": 0.0}


def test_incomplete_months_are_dropped():
    start, end = to_seconds("2023-06-15T00:00:00Z"), to_seconds("2023-09-10T00:00:00Z")
    assert complete_months(start, end) == ["2023-07", "2023-08"]
    assert complete_months(to_seconds("2023-06-01T00:00:00Z"), to_seconds("2023-07-01T00:00:00Z")) == ["2023-06"]
    assert complete_months(start, start + DAY) == []
    rep = availability_series([constant_series("a", 0.0, 10)], 0.1)
    assert rep.per_month == () and rep.overall is None


def test_overall_is_unweighted_mean_of_months():
    # June (30 d) clear, July (31 d) cloudy: the monthly mean is 50 % even though ticks are not split 50/50
    times = T0 + 900.0 * np.arange(61 * 96)
    cloud = (times >= to_seconds("2023-07-01T00:00:00Z")).astype(float)
    rep = availability_series([WeatherSeries("a", times, cloud, span_end=T0 + 61 * DAY)], 0.1)
    assert rep.overall == 50.0
    assert rep.tick_availability_pct == pytest.approx(100 * 30 / 61)


def test_no_overlap():
    a = constant_series("a", 0.0)
    b = WeatherSeries("b", a.times + 2 * DAY, a.cloud)
    with pytest.raises(NoOverlap):
        availability_series([a, b], 0.1)
    with pytest.raises(NoOverlap):
        availability_series([], 0.1)


def test_outage_matches_independence_product():
    n = 100_000
    series = synth_weather([0.3] * 4, (T0, T0 + n * 900.0), 900.0, rng_seed=2024)
    prev = None
    for k in range(1, 5):
        rep = availability_series(series[:k], 0.1)
        assert rep.times.size == n
        p = closed_form_outage_oracle([0.3] * k)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(rep.outage_pct / 100 - p) < 3 * se
        if prev is not None:
            assert np.all(rep.available >= prev)
        prev = rep.available


@given(probs=st.lists(st.floats(0, 1), min_size=2, max_size=5), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_adding_a_station_never_hurts(probs, seed):
    series = synth_weather(probs, (T0, T0 + 40 * DAY), 900.0, seed)
    small = availability_series(series[:-1], 0.1)
    big = availability_series(series, 0.1)
    assert np.all(big.available >= small.available)
    assert all(b >= s for (_, s), (_, b) in zip(small.per_month, big.per_month))


# --- throughput ------------------------------------------------------------

def test_half_rate_single_pass_is_fifty_percent():
    p = make_pass("a", 1, T0, T0 + 600.0)
    c_max = 1e9
    s = throughput_from_rates([p], [np.full(p.times.size, c_max / 2)], c_max)
    assert s.max_bits == 6e11 and s.total_bits == 3e11
    assert s.pdt == 50.0
    assert s.per_pass[0].rate == c_max / 2


def test_no_passes():
    s = throughput_from_rates([], [], 1e9)
    assert s.total_bits == 0 and s.max_bits == 0 and s.pdt is None and s.per_month == ()


def test_all_blocked_gives_zero():
    passes = (make_pass("a", 1, T0 + 100, T0 + 500), make_pass("a", 2, T0 + 6000, T0 + 6400))
    link = StationLink("a", passes, constant_series("a", 0.5), TERM, ENV)
    s = throughput([link], NOISE, 1e9)
    assert s.total_bits == 0 and s.max_bits > 0 and s.pdt == 0.0


def test_clear_sky_saturates_and_pdt_is_bounded():
    passes = (make_pass("a", 1, T0 + 100.5, T0 + 530.2),)
    link = StationLink("a", passes, constant_series("a", 0.0), TERM, ENV)
    s = throughput([link], NOISE, 1e9)  # default terminal easily exceeds 1 Gbps
    assert s.pdt == pytest.approx(100.0, rel=1e-12)
    s2 = throughput([link], NOISE, 1e15)
    assert 0 < s2.pdt < 100


def test_weather_must_cover_passes():
    link = StationLink("a", (make_pass("a", 1, T0 + 2 * DAY, T0 + 2 * DAY + 300),),
                       constant_series("a", 0.0), TERM, ENV)
    with pytest.raises(SpecMismatch):
        throughput([link], NOISE, 1e9)


def test_monthly_grouping_by_aos():
    june_end = to_seconds("2023-07-01T00:00:00Z")
    passes = [make_pass("a", 1, T0 + 100, T0 + 200), make_pass("a", 2, june_end - 50, june_end + 50)]
    s = throughput_from_rates(passes, [np.full(p.times.size, 1.0) for p in passes], 2.0)
    assert s.per_month == (("2023-06", 200.0),)


def test_overlapping_passes_credit_the_best_station():
    a = make_pass("a", 1, T0, T0 + 600)
    b = make_pass("b", 1, T0 + 300, T0 + 900)
    ra = [np.full(a.times.size, 5.0)]
    rb = [np.full(b.times.size, 5.0)]
    credited = exclusive_rates([[a], [b]], [ra, rb])
    # equal rates: catalog order wins inside the overlap
    assert np.all(credited[0][0] == 5.0)
    assert np.all(credited[1][0][b.times <= a.los] == 0.0) and np.all(credited[1][0][b.times > a.los] == 5.0)
    rb_hi = [np.full(b.times.size, 7.0)]
    credited = exclusive_rates([[a], [b]], [ra, rb_hi])
    assert np.all(credited[0][0][a.times >= b.aos] == 0.0) and np.all(credited[1][0] == 7.0)
    # a blocked rival never takes the slot
    credited = exclusive_rates([[a], [b]], [[np.zeros(a.times.size)], rb])
    assert np.all(credited[1][0] == 5.0)


def test_adding_station_never_reduces_throughput():
    rng = np.random.default_rng(6)
    stations = []
    for sid in "abcd":
        starts = np.sort(rng.uniform(0, DAY - 700, 6))
        ps = tuple(make_pass(sid, i, T0 + s, T0 + s + rng.uniform(200, 600), slant=rng.uniform(6e5, 2e6))
                   for i, s in enumerate(starts))
        weather = synth_weather([0.5], (T0, T0 + DAY), 900.0, int(rng.integers(1 << 30)), [sid])[0]
        stations.append(StationLink(sid, ps, weather, TERM, ENV))
    noise = NoiseSpec(500.0, 1e9)
    prev = -1.0
    for k in range(1, 5):
        t = throughput(stations[:k], noise, 1e15).total_bits
        assert t >= prev * (1 - 1e-9)
        prev = t


# --- buffer ----------------------------------------------------------------

def test_buffer_closed_forms():
    span = (0.0, 10_000.0)
    r = buffer_simulate([], 1000.0, 1_000_000, span)
    assert r.final.lost_total == 1000 * 10_000 - 1_000_000
    assert r.final.fill == 1_000_000
    z = buffer_simulate([(100.0, 400.0, 5e6)], 0.0, 1_000_000, span)
    assert z.final.lost_total == 0 and z.final.downlinked_total == 0


def test_buffer_trajectory_breakpoints():
    r = buffer_simulate([(600.0, 700.0, 30.0)], 10.0, 5000, (0.0, 1000.0))
    # fills to 5000 at t=500, drains at 20/s during the contact, refills after
    i = list(r.times).index(500.0)
    assert r.fill[i] == 5000 and r.lost_total[i] == 0
    assert r.fill[list(r.times).index(700.0)] == 3000
    # 100 s of overflow before the contact, refilled by t=900, then 100 s more
    assert r.final.fill == 5000 and r.final.lost_total == 1000 + 1000
    assert r.fill[list(r.times).index(900.0)] == 5000


contact_lists = st.lists(
    st.tuples(st.floats(0, 9e4), st.floats(10, 900), st.floats(0, 2e9)), max_size=12)


@given(contacts=contact_lists, gen=st.floats(0, 5e7), cap=st.integers(1, 10**12))
@settings(max_examples=200, deadline=None)
def test_buffer_conservation(contacts, gen, cap):
    r = buffer_simulate([(a, a + d, rate) for a, d, rate in contacts], gen, cap, (0.0, 86400.0))
    f = r.final
    assert f.generated_total == f.downlinked_total + f.lost_total + f.fill
    assert 0 <= f.fill <= cap
    assert np.all((r.fill >= 0) & (r.fill <= cap)) and np.all(np.diff(r.lost_total) >= 0)


def test_buffer_matches_fine_step_oracle():
    rng = np.random.default_rng(21)
    contacts = []
    for _ in range(30):
        a = float(rng.integers(0, 86000))
        contacts.append((a, a + float(rng.integers(60, 600)), float(rng.uniform(1e6, 1e8))))
    main = buffer_simulate(contacts, 2e6, 3e10, (0.0, 86400.0)).final
    ref = fine_step_buffer_oracle(contacts, 2e6, 3e10, (0.0, 86400.0))
    assert abs(main.generated_total - ref["generated"]) <= 1
    for key, val in (("downlinked", main.downlinked_total), ("lost", main.lost_total), ("fill", main.fill)):
        assert abs(val - ref[key]) < 1e3, key


# --- correlation -----------------------------------------------------------

def test_self_and_complement_correlation():
    x = synth_weather([0.4], (T0, T0 + 20 * DAY), 900.0, 3, ["x"])[0]
    same = WeatherSeries("y", x.times, x.cloud, span_end=x.span_end)
    comp = WeatherSeries("z", x.times, 1.0 - x.cloud, span_end=x.span_end)
    m = pearson_cloud_correlation([x, same, comp])
    assert m.r[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert m.r[0, 2] == pytest.approx(-1.0, abs=1e-12)
    assert np.array_equal(m.r, m.r.T) and np.all(np.diag(m.r) == 1.0)


def test_correlation_matches_oracle_and_is_psd():
    series = synth_weather([0.2, 0.5, 0.7, 0.4], (T0, T0 + 10 * DAY), 900.0, 11)
    # introduce dependence through a shared component
    mixed = WeatherSeries("m", series[0].times, np.maximum(series[0].cloud, series[1].cloud),
                          span_end=series[0].span_end)
    m = pearson_cloud_correlation(series + [mixed])
    _, x = align(series + [mixed])
    for i in range(5):
        for j in range(5):
            if i != j:
                assert m.r[i, j] == pytest.approx(pearson_oracle(list(x[i]), list(x[j])), abs=1e-12)
    assert np.linalg.eigvalsh(m.r).min() > -1e-9


def test_independent_series_are_uncorrelated():
    a, b = synth_weather([0.5, 0.5], (T0, T0 + 100_000 * 900.0), 900.0, 99)
    assert abs(pearson_cloud_correlation([a, b]).r[0, 1]) < 0.02


def test_degenerate_series():
    a = synth_weather([0.5], (T0, T0 + DAY), 900.0, 1, ["a"])[0]
    flat = constant_series("f", 0.0)
    m = pearson_cloud_correlation([a, flat])
    assert np.isnan(m.r[0, 1]) and np.isnan(m.r[1, 1]) and m.r[0, 0] == 1.0
    with pytest.raises(DegenerateSeries):
        pearson_cloud_correlation([a, flat], strict=True)
