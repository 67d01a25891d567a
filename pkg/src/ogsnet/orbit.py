"""Two-line element sets, Keplerian propagation with secular J2, and station geometry.

Propagation is deliberately simpler than SGP4: mean elements from the TLE are
advanced with first-order secular J2 rates for RAAN, argument of perigee and
mean anomaly, then converted to an inertial position by solving Kepler's
equation. That is accurate to pass timing at the minute level over a few
weeks, which is all availability statistics need.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import ChecksumMismatch, EccentricityDomain, FormatError
from .timeutil import DAY, julian_date, to_seconds

log = logging.getLogger(__name__)

MU_EARTH = 3.986004418e14  # m^3/s^2
WGS84_A = 6378137.0  # m
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
J2 = 1.08262668e-3
EARTH_RADIUS = WGS84_A

KEPLER_TOL = 1e-12
KEPLER_MAX_ITER = 50
EPOCH_WARN_DAYS = 30.0


# ---------------------------------------------------------------------------
# TLE parsing and formatting

def tle_checksum(line: str) -> int:
    """Modulo-10 checksum over the first 68 characters (digits, '-' counts 1)."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


@dataclass(frozen=True)
class TwoLineElements:
    satellite_id: int
    epoch: datetime
    inclination: float  # deg
    raan: float  # deg
    eccentricity: float
    arg_perigee: float  # deg
    mean_anomaly: float  # deg
    mean_motion: float  # rev/day
    bstar: float = 0.0  # 1/earth radii
    mean_motion_dot: float = 0.0  # rev/day^2 (first derivative / 2 as printed)
    mean_motion_ddot: float = 0.0
    classification: str = "U"
    international_designator: str = ""
    ephemeris_type: int = 0
    element_set_number: int = 999
    revolution_number: int = 0
    name: str | None = None
    element_set_lines: tuple[str, str] | None = field(default=None, compare=False)
    # verbatim text of the two exponent-coded fields, kept for exact re-serialisation
    exponent_text: tuple[str, str] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.inclination <= 180.0:
            raise FormatError(f"inclination {self.inclination} outside [0, 180]")
        if not 0.0 <= self.eccentricity < 1.0:
            raise FormatError(f"eccentricity {self.eccentricity} outside [0, 1)")
        if not self.mean_motion > 0.0:
            raise FormatError(f"mean motion {self.mean_motion} must be positive")

    @property
    def epoch_seconds(self) -> float:
        return to_seconds(self.epoch)

    @property
    def period(self) -> float:
        """Unperturbed orbital period in seconds."""
        return DAY / self.mean_motion

    @property
    def semi_major_axis(self) -> float:
        n = self.mean_motion * 2.0 * math.pi / DAY
        return (MU_EARTH / n**2) ** (1.0 / 3.0)

    def to_lines(self) -> tuple[str, str]:
        """Serialise back to two 69-character lines with fresh checksums."""
        yy = self.epoch.year % 100
        start = datetime(self.epoch.year, 1, 1, tzinfo=timezone.utc)
        day = (self.epoch - start).total_seconds() / DAY + 1.0
        if self.exponent_text is not None:
            nddot_txt, bstar_txt = self.exponent_text
        else:
            nddot_txt, bstar_txt = _format_exp(self.mean_motion_ddot), _format_exp(self.bstar)
        ndot_txt = ("-" if self.mean_motion_dot < 0 else " ") + f"{abs(self.mean_motion_dot):.8f}"[1:]
        line1 = (
            f"1 {self.satellite_id:05d}{self.classification} {self.international_designator:<8.8} "
            f"{yy:02d}{day:012.8f} {ndot_txt} {nddot_txt} {bstar_txt} "
            f"{self.ephemeris_type:1d} {self.element_set_number:4d}"
        )
        ecc = f"{int(round(self.eccentricity * 1e7)):07d}"
        line2 = (
            f"2 {self.satellite_id:05d} {self.inclination:8.4f} {self.raan:8.4f} {ecc} "
            f"{self.arg_perigee:8.4f} {self.mean_anomaly:8.4f} {self.mean_motion:11.8f}"
            f"{self.revolution_number:5d}"
        )
        return line1 + str(tle_checksum(line1)), line2 + str(tle_checksum(line2))


def _format_exp(value: float) -> str:
    """Format a value in the TLE ' 12345-3' (= 0.12345e-3) convention."""
    if value == 0.0:
        return " 00000-0"
    sign = "-" if value < 0 else " "
    exp = math.floor(math.log10(abs(value))) + 1
    mant = int(round(abs(value) / 10.0**exp * 1e5))
    if mant >= 100000:
        mant //= 10
        exp += 1
    esign = "-" if exp < 0 else "+"
    return f"{sign}{mant:05d}{esign}{abs(exp):1d}"


_EXP_RE = re.compile(r"^([ +-]?)(\d{5})([ +-]?\d)$")


def _parse_exp(text: str, line: int, cols: tuple[int, int]) -> float:
    m = _EXP_RE.match(text.strip())
    if not m:
        raise FormatError(f"bad exponent field {text!r}", line, cols)
    sign = -1.0 if m.group(1) == "-" else 1.0
    exp = int(m.group(3).replace(" ", "+"))
    return sign * float("0." + m.group(2)) * 10.0**exp


def _field(line: str, lineno: int, start: int, end: int, conv):
    """Extract 1-indexed inclusive columns start..end and convert."""
    text = line[start - 1:end]
    try:
        return conv(text)
    except ValueError:
        raise FormatError(f"non-numeric field {text!r}", lineno, (start, end)) from None


def _check_line(line: str, lineno: int) -> None:
    if len(line) != 69:
        raise FormatError(f"line has {len(line)} characters, expected 69", lineno, (1, len(line)))
    if line[0] != str(lineno):
        raise FormatError(f"line number field is {line[0]!r}, expected {lineno}", lineno, (1, 1))
    if not line[68].isdigit():
        raise FormatError("checksum column is not a digit", lineno, (69, 69))
    expected = tle_checksum(line)
    if int(line[68]) != expected:
        raise ChecksumMismatch(
            f"checksum digit {line[68]} does not match computed {expected}", lineno, (69, 69)
        )


def parse_tle(lines, name: str | None = None) -> TwoLineElements:
    """Parse a 2-line or 3-line (name + 2) element set."""
    lines = [ln.rstrip("\r\n") for ln in lines if ln.strip()]
    if len(lines) == 3:
        name = lines[0].strip()
        if name.startswith("0 "):
            name = name[2:].strip()
        lines = lines[1:]
    if len(lines) != 2:
        raise FormatError(f"expected 2 element lines, got {len(lines)}")
    l1, l2 = (ln.rstrip() if len(ln.rstrip()) == 69 else ln for ln in lines)
    _check_line(l1, 1)
    _check_line(l2, 2)

    satnum = _field(l1, 1, 3, 7, int)
    satnum2 = _field(l2, 2, 3, 7, int)
    if satnum != satnum2:
        raise FormatError(f"satellite number {satnum2} differs from line 1 ({satnum})", 2, (3, 7))

    yy = _field(l1, 1, 19, 20, int)
    day = _field(l1, 1, 21, 32, float)
    year = 2000 + yy if yy < 57 else 1900 + yy
    epoch = datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(days=day - 1.0)

    ndot = _field(l1, 1, 34, 43, lambda s: float(s.strip()))
    nddot_txt, bstar_txt = l1[44:52], l1[53:61]
    nddot = _parse_exp(nddot_txt, 1, (45, 52))
    bstar = _parse_exp(bstar_txt, 1, (54, 61))
    eph = l1[62]
    elset = l1[64:68]

    ecc_txt = l2[26:33]
    if not ecc_txt.strip().isdigit():
        raise FormatError(f"non-numeric eccentricity {ecc_txt!r}", 2, (27, 33))

    return TwoLineElements(
        satellite_id=satnum,
        epoch=epoch,
        inclination=_field(l2, 2, 9, 16, float),
        raan=_field(l2, 2, 18, 25, float),
        eccentricity=float("0." + ecc_txt.strip().rjust(7, "0")),
        arg_perigee=_field(l2, 2, 35, 42, float),
        mean_anomaly=_field(l2, 2, 44, 51, float),
        mean_motion=_field(l2, 2, 53, 63, float),
        bstar=bstar,
        mean_motion_dot=ndot,
        mean_motion_ddot=nddot,
        classification=l1[7],
        international_designator=l1[9:17].rstrip(),
        ephemeris_type=int(eph) if eph.strip() else 0,
        element_set_number=int(elset) if elset.strip() else 0,
        revolution_number=_field(l2, 2, 64, 68, lambda s: int(s) if s.strip() else 0),
        name=name,
        element_set_lines=(l1, l2),
        exponent_text=(nddot_txt, bstar_txt),
    )


def read_tle_file(path) -> list[TwoLineElements]:
    """Read every 2- or 3-line element set in a file."""
    with open(path, encoding="ascii") as fh:
        raw = [ln.rstrip("\r\n") for ln in fh if ln.strip()]
    out, name, i = [], None, 0
    while i < len(raw):
        ln = raw[i]
        if ln.startswith("1 ") and i + 1 < len(raw) and raw[i + 1].startswith("2 "):
            out.append(parse_tle([ln, raw[i + 1]], name=name))
            name = None
            i += 2
        else:
            name = ln.strip()
            i += 1
    if not out:
        raise FormatError(f"no element sets found in {path}")
    return out


def make_tle(satellite_id: int, epoch, inclination: float, raan: float, eccentricity: float,
             arg_perigee: float, mean_anomaly: float, mean_motion: float, **kw) -> TwoLineElements:
    """Build an element set from values and round-trip it through the text format."""
    epoch = datetime.fromtimestamp(to_seconds(epoch), tz=timezone.utc)
    draft = TwoLineElements(satellite_id, epoch, inclination, raan, eccentricity,
                            arg_perigee, mean_anomaly, mean_motion, **kw)
    return parse_tle(draft.to_lines(), name=kw.get("name"))


# ---------------------------------------------------------------------------
# Propagation

def solve_kepler(mean_anomaly: float, eccentricity: float) -> float:
    """Solve E - e sin E = M by Newton iteration starting from E = M."""
    return float(_solve_kepler_array(np.asarray([mean_anomaly], float), eccentricity)[0])


def _solve_kepler_array(M: np.ndarray, e: float) -> np.ndarray:
    if not 0.0 <= e < 1.0:
        raise EccentricityDomain(f"eccentricity {e} outside [0, 1)")
    turns = np.floor((M + np.pi) / (2.0 * np.pi))
    Mn = M - 2.0 * np.pi * turns
    E = Mn.copy()
    for _ in range(KEPLER_MAX_ITER):
        f = E - e * np.sin(E) - Mn
        if np.all(np.abs(f) < KEPLER_TOL):
            return E + 2.0 * np.pi * turns
        E = E - f / (1.0 - e * np.cos(E))
    f = E - e * np.sin(E) - Mn
    if np.all(np.abs(f) < KEPLER_TOL):
        return E + 2.0 * np.pi * turns
    raise EccentricityDomain(f"Kepler iteration did not converge in {KEPLER_MAX_ITER} steps (e={e})")


def secular_rates(tle: TwoLineElements, j2: bool = True) -> tuple[float, float, float]:
    """(dRAAN/dt, dArgPerigee/dt, dM/dt) in rad/s."""
    n = tle.mean_motion * 2.0 * math.pi / DAY
    if not j2:
        return 0.0, 0.0, n
    e = tle.eccentricity
    p = tle.semi_major_axis * (1.0 - e * e)
    k = n * J2 * (EARTH_RADIUS / p) ** 2
    ci = math.cos(math.radians(tle.inclination))
    raan_dot = -1.5 * k * ci
    argp_dot = 0.75 * k * (5.0 * ci * ci - 1.0)
    m_dot = n + 0.75 * k * math.sqrt(1.0 - e * e) * (3.0 * ci * ci - 1.0)
    return raan_dot, argp_dot, m_dot


def mean_elements_at(tle: TwoLineElements, t, j2: bool = True):
    """Mean (RAAN, argument of perigee, mean anomaly) in radians at time t."""
    dt = np.asarray(to_seconds(t) if not isinstance(t, np.ndarray) else t, float) - tle.epoch_seconds
    raan_dot, argp_dot, m_dot = secular_rates(tle, j2)
    raan = math.radians(tle.raan) + raan_dot * dt
    argp = math.radians(tle.arg_perigee) + argp_dot * dt
    M = math.radians(tle.mean_anomaly) + m_dot * dt
    return raan, argp, M


def propagate_array(tle: TwoLineElements, times, j2: bool = True):
    """Vectorised propagation; times are POSIX seconds. Returns (N,3) position and velocity."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    raan, argp, M = mean_elements_at(tle, times, j2)
    raan = np.broadcast_to(raan, times.shape)
    argp = np.broadcast_to(argp, times.shape)
    e = tle.eccentricity
    a = tle.semi_major_axis
    n = tle.mean_motion * 2.0 * math.pi / DAY
    E = _solve_kepler_array(np.asarray(M, float), e)
    cosE, sinE = np.cos(E), np.sin(E)
    b = a * math.sqrt(1.0 - e * e)
    xp = a * (cosE - e)
    yp = b * sinE
    denom = 1.0 - e * cosE
    vxp = -a * n * sinE / denom
    vyp = b * n * cosE / denom

    ci, si = math.cos(math.radians(tle.inclination)), math.sin(math.radians(tle.inclination))
    cO, sO = np.cos(raan), np.sin(raan)
    cw, sw = np.cos(argp), np.sin(argp)
    # columns of the perifocal -> inertial rotation
    px = cO * cw - sO * sw * ci
    py = sO * cw + cO * sw * ci
    pz = sw * si
    qx = -cO * sw - sO * cw * ci
    qy = -sO * sw + cO * cw * ci
    qz = cw * si
    pos = np.stack([px * xp + qx * yp, py * xp + qy * yp, pz * xp + qz * yp], axis=-1)
    vel = np.stack([px * vxp + qx * vyp, py * vxp + qy * vyp, pz * vxp + qz * vyp], axis=-1)
    return pos, vel


def propagate(tle: TwoLineElements, t, j2: bool = True):
    """Inertial position (m) and velocity (m/s) at time t."""
    s = to_seconds(t)
    if abs(s - tle.epoch_seconds) > EPOCH_WARN_DAYS * DAY:
        log.warning("propagating %.1f days from TLE epoch", (s - tle.epoch_seconds) / DAY)
    pos, vel = propagate_array(tle, [s], j2)
    return pos[0], vel[0]


# ---------------------------------------------------------------------------
# Earth model and topocentric geometry

@dataclass(frozen=True)
class GeodeticSite:
    latitude: float  # deg
    longitude: float  # deg
    altitude: float = 0.0  # m

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")

    def ecef(self) -> np.ndarray:
        lat, lon = math.radians(self.latitude), math.radians(self.longitude)
        sl = math.sin(lat)
        N = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sl * sl)
        r = (N + self.altitude) * math.cos(lat)
        return np.array([r * math.cos(lon), r * math.sin(lon),
                         (N * (1.0 - WGS84_E2) + self.altitude) * sl])


@dataclass(frozen=True)
class TopocentricState:
    time: float  # POSIX seconds
    azimuth: float  # deg, clockwise from north
    elevation: float  # deg
    slant_range: float  # m


def gmst(times):
    """Greenwich mean sidereal angle in radians (IAU 1982)."""
    T = (julian_date(times) - 2451545.0) / 36525.0
    sec = 67310.54841 + (876600.0 * 3600.0 + 8640184.812866) * T + 0.093104 * T**2 - 6.2e-6 * T**3
    return np.radians(np.mod(sec, DAY) / 240.0)


def topocentric_array(positions, site: GeodeticSite, times):
    """Azimuth, elevation (deg) and slant range (m) for (N,3) inertial positions."""
    positions = np.atleast_2d(np.asarray(positions, float))
    g = gmst(np.atleast_1d(np.asarray(times, float)))
    cg, sg = np.cos(g), np.sin(g)
    x = cg * positions[:, 0] + sg * positions[:, 1]
    y = -sg * positions[:, 0] + cg * positions[:, 1]
    z = positions[:, 2]
    sx, sy, sz = site.ecef()
    rx, ry, rz = x - sx, y - sy, z - sz

    lat, lon = math.radians(site.latitude), math.radians(site.longitude)
    sphi, cphi, slam, clam = math.sin(lat), math.cos(lat), math.sin(lon), math.cos(lon)
    south = sphi * clam * rx + sphi * slam * ry - cphi * rz
    east = -slam * rx + clam * ry
    zen = cphi * clam * rx + cphi * slam * ry + sphi * rz

    rng = np.sqrt(rx * rx + ry * ry + rz * rz)
    el = np.degrees(np.arcsin(np.clip(zen / rng, -1.0, 1.0)))
    az = np.mod(np.degrees(np.arctan2(east, -south)), 360.0)
    az = np.where(az >= 360.0, az - 360.0, az)
    return az, el, rng


def eci_to_topocentric(position, site: GeodeticSite, t) -> TopocentricState:
    s = to_seconds(t)
    az, el, rng = topocentric_array(np.asarray(position, float)[None, :], site, [s])
    return TopocentricState(s, float(az[0]), float(el[0]), float(rng[0]))


def elevation_profile(tle: TwoLineElements, site: GeodeticSite, times, j2: bool = True):
    """Azimuth, elevation and range of the satellite over an array of POSIX times."""
    times = np.atleast_1d(np.asarray(times, float))
    pos, _ = propagate_array(tle, times, j2)
    return topocentric_array(pos, site, times)
