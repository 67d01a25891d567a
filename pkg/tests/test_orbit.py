import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from ogsnet.errors import ChecksumMismatch, EccentricityDomain, FormatError
from ogsnet.orbit import (
    MU_EARTH, WGS84_A, GeodeticSite, eci_to_topocentric, gmst, make_tle, mean_elements_at,
    parse_tle, propagate, propagate_array, read_tle_file, solve_kepler, topocentric_array,
)
from ogsnet.testing.oracles import kepler_bisection, topocentric_oracle
from ogsnet.timeutil import to_seconds

from conftest import EPOCH, tle_line

ISS = [
    "ISS (ZARYA)",
    "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927",
    "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537",
]

# hand-built lines; the checksum comes from conftest.tle_line, not the library
SYN1 = tle_line("1 40001U 23001A   23152.50000000  .00001000  00000-0  12345-4 0  9990"[:68])
SYN2 = tle_line("2 40001  97.4400 120.5000 0006703  45.0000 315.0000 15.19000000 1234"[:68])


def test_parse_synthetic_fields():
    tle = parse_tle([SYN1, SYN2])
    assert tle.mean_motion == 15.19
    assert tle.eccentricity == 0.0006703
    assert tle.inclination == 97.44
    assert tle.raan == 120.5
    assert tle.satellite_id == 40001
    assert tle.bstar == pytest.approx(0.12345e-4)
    assert tle.epoch.isoformat() == "2023-06-01T12:00:00+00:00"


def test_parse_iss_three_line():
    tle = parse_tle(ISS)
    assert tle.name == "ISS (ZARYA)"
    assert tle.eccentricity == pytest.approx(0.0006703)
    assert tle.bstar == pytest.approx(-0.11606e-4)
    assert tle.mean_motion_dot == pytest.approx(-0.00002182)
    assert tle.epoch.year == 2008


@pytest.mark.parametrize("lineno", [1, 2])
def test_checksum_perturbed(lineno):
    lines = [SYN1, SYN2]
    bad = lines[lineno - 1]
    lines[lineno - 1] = bad[:68] + str((int(bad[68]) + 1) % 10)
    with pytest.raises(ChecksumMismatch) as exc:
        parse_tle(lines)
    assert exc.value.line == lineno
    assert exc.value.columns == (69, 69)


def test_format_errors():
    with pytest.raises(FormatError, match="69"):
        parse_tle([SYN1[:-2], SYN2])
    body = SYN2[:8] + "97.4X00" + SYN2[15:68]
    with pytest.raises(FormatError) as exc:
        parse_tle([SYN1, tle_line(body)])
    assert exc.value.line == 2 and exc.value.columns == (9, 16)


def test_round_trip_is_byte_exact():
    for lines in (ISS[1:], [SYN1, SYN2]):
        assert parse_tle(lines).to_lines() == tuple(lines)


@given(
    inc=st.floats(0, 180), raan=st.floats(0, 359.9999), ecc=st.integers(0, 9_999_999),
    argp=st.floats(0, 359.9999), ma=st.floats(0, 359.9999), mm=st.floats(0.5, 16.9),
)
@settings(max_examples=100, deadline=None)
def test_round_trip_property(inc, raan, ecc, argp, ma, mm):
    tle = make_tle(12345, EPOCH, round(inc, 4), round(raan, 4), ecc / 1e7, round(argp, 4),
                   round(ma, 4), round(mm, 8))
    assert all(len(l) == 69 for l in tle.element_set_lines)
    assert parse_tle(tle.element_set_lines).to_lines() == tle.element_set_lines


def test_read_tle_file(tmp_path):
    p = tmp_path / "set.tle"
    p.write_text("\n".join(ISS + [SYN1, SYN2]) + "\n")
    sets = read_tle_file(p)
    assert [s.satellite_id for s in sets] == [25544, 40001]
    assert sets[0].name == "ISS (ZARYA)" and sets[1].name is None


# --- Kepler --------------------------------------------------------------

def test_kepler_examples():
    assert solve_kepler(0.0, 0.3) == 0.0
    assert solve_kepler(math.pi, 0.5) == pytest.approx(math.pi, abs=1e-12)
    assert solve_kepler(1.0, 0.1) == pytest.approx(1.08859775, abs=1e-8)
    assert solve_kepler(1.0, 0.1) == pytest.approx(kepler_bisection(1.0, 0.1), abs=1e-12)


@given(M=st.floats(-20, 20), e=st.floats(0, 0.95))
@settings(max_examples=300)
def test_kepler_residual(M, e):
    E = solve_kepler(M, e)
    assert abs(E - e * math.sin(E) - M) < 1e-11
    assert E == pytest.approx(kepler_bisection(M, e), abs=1e-9)


def test_kepler_domain():
    with pytest.raises(EccentricityDomain):
        solve_kepler(1.0, 1.0)


# --- propagation ---------------------------------------------------------

def test_circular_orbit_periodic(polar_tle):
    t0 = polar_tle.epoch_seconds
    p0, _ = propagate(polar_tle, t0, j2=False)
    p1, _ = propagate(polar_tle, t0 + polar_tle.period, j2=False)
    assert np.linalg.norm(p1 - p0) < 1.0


def test_altitude_matches_kepler_third_law(tsx_tle):
    T = 86400.0 / 15.19
    a_oracle = (MU_EARTH * (T / (2 * math.pi)) ** 2) ** (1 / 3)
    assert tsx_tle.semi_major_axis == pytest.approx(a_oracle, rel=1e-12)
    times = tsx_tle.epoch_seconds + np.linspace(0, 86400, 500)
    pos, _ = propagate_array(tsx_tle, times)
    alt = np.linalg.norm(pos, axis=1) - WGS84_A
    assert np.all(np.abs(alt / 1e3 - 514.0) <= 15.0)


def test_epoch_mean_anomaly(tsx_tle):
    raan, argp, M = mean_elements_at(tsx_tle, tsx_tle.epoch)
    assert math.degrees(M) == pytest.approx(tsx_tle.mean_anomaly, abs=1e-12)
    assert math.degrees(raan) == pytest.approx(tsx_tle.raan, abs=1e-12)


def test_sun_synchronous_precession(tsx_tle):
    raan0, _, _ = mean_elements_at(tsx_tle, tsx_tle.epoch_seconds)
    raan1, _, _ = mean_elements_at(tsx_tle, tsx_tle.epoch_seconds + 86400.0)
    # a 97.44 deg orbit at ~510 km precesses close to the solar rate of 0.9856 deg/day
    assert math.degrees(raan1 - raan0) == pytest.approx(0.9856, abs=0.05)


def test_radius_constant_circular_no_j2(polar_tle):
    times = polar_tle.epoch_seconds + np.linspace(0, polar_tle.period, 1000)
    pos, _ = propagate_array(polar_tle, times, j2=False)
    r = np.linalg.norm(pos, axis=1)
    assert (r.max() - r.min()) / r.mean() < 1e-9


def test_propagate_is_pure(tsx_tle):
    t = tsx_tle.epoch_seconds + 12345.678
    a = propagate(tsx_tle, t)
    b = propagate(tsx_tle, t)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_velocity_matches_finite_difference(tsx_tle):
    t = tsx_tle.epoch_seconds + 5000.0
    _, v = propagate(tsx_tle, t, j2=False)
    p1, _ = propagate(tsx_tle, t - 0.5, j2=False)
    p2, _ = propagate(tsx_tle, t + 0.5, j2=False)
    assert_allclose(v, (p2 - p1), rtol=1e-6)


# --- topocentric ---------------------------------------------------------

def _eci_from_ecef(ecef, t):
    g = float(gmst(np.array([t]))[0])
    c, s = math.cos(g), math.sin(g)
    return np.array([c * ecef[0] - s * ecef[1], s * ecef[0] + c * ecef[1], ecef[2]])


@pytest.mark.parametrize("lat,lon", [(0.0, 0.0), (0.0, 123.0), (90.0, 0.0), (-90.0, 40.0)])
def test_zenith_and_nadir(lat, lon):
    site = GeodeticSite(lat, lon, 0.0)
    t = to_seconds("2024-01-01T06:00:00Z")
    ecef = site.ecef()
    up = ecef / np.linalg.norm(ecef)
    above = _eci_from_ecef(ecef + 500e3 * up, t)
    state = eci_to_topocentric(above, site, t)
    assert state.elevation == pytest.approx(90.0, abs=1e-6)
    assert state.slant_range == pytest.approx(500e3, abs=1.0)
    below = _eci_from_ecef(-ecef - 500e3 * up, t)
    assert eci_to_topocentric(below, site, t).elevation == pytest.approx(-90.0, abs=1e-6)


def test_azimuth_cardinal_points():
    site = GeodeticSite(0.0, 0.0, 0.0)
    t = 0.0
    north = _eci_from_ecef(site.ecef() + np.array([0.0, 0.0, 1e6]), t)
    east = _eci_from_ecef(site.ecef() + np.array([0.0, 1e6, 0.0]), t)
    assert eci_to_topocentric(north, site, t).azimuth == pytest.approx(0.0, abs=1e-9)
    assert eci_to_topocentric(east, site, t).azimuth == pytest.approx(90.0, abs=1e-9)


@given(
    lat=st.floats(-89.9, 89.9), lon=st.floats(-180, 180), alt=st.floats(0, 4000),
    x=st.floats(-4e7, 4e7), y=st.floats(-4e7, 4e7), z=st.floats(-4e7, 4e7),
    t=st.floats(1.5e9, 1.8e9),
)
@settings(max_examples=300)
def test_topocentric_matches_rotation_matrix_oracle(lat, lon, alt, x, y, z, t):
    pos = np.array([x, y, z])
    if np.linalg.norm(pos) < 7e6:
        pos = pos / max(np.linalg.norm(pos), 1.0) * 7e6 + 1.0
    st_ = eci_to_topocentric(pos, GeodeticSite(lat, lon, alt), t)
    az, el, rng = topocentric_oracle(pos, lat, lon, alt, t)
    assert st_.elevation == pytest.approx(el, abs=1e-7)
    assert st_.slant_range == pytest.approx(rng, rel=1e-10)
    if abs(el) < 89.9:
        assert (st_.azimuth - az + 180.0) % 360.0 - 180.0 == pytest.approx(0.0, abs=1e-6)


def test_bounds_over_many_samples(tsx_tle):
    rng = np.random.default_rng(7)
    times = tsx_tle.epoch_seconds + rng.uniform(-7 * 86400, 7 * 86400, 10_000)
    pos, _ = propagate_array(tsx_tle, times)
    for lat, lon in rng.uniform([-90, -180], [90, 180], size=(5, 2)):
        az, el, r = topocentric_array(pos, GeodeticSite(lat, lon), times)
        assert np.all((az >= 0) & (az < 360))
        assert np.all((el >= -90) & (el <= 90))
        assert np.all(r > 0)
