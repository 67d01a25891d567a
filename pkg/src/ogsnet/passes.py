"""Visibility pass detection above an elevation mask."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidThreshold, WindowTooLarge
from .orbit import GeodeticSite, TopocentricState, TwoLineElements, elevation_profile
from .timeutil import DAY, from_seconds, to_seconds

COARSE_STEP = 30.0  # s
SAMPLE_STEP = 10.0  # s
REFINE_TOL = 0.01  # s; well inside the 1 s requirement
MAX_WINDOW_DAYS = 400.0
GRAZING_MARGIN = 5.0  # deg below the mask at which a coarse local maximum is re-examined


@dataclass(frozen=True, eq=False)
class Pass:
    """One visibility interval. Geometry samples are kept as parallel arrays."""

    station_id: str
    number: int
    aos: float  # POSIX s
    los: float
    times: np.ndarray
    azimuth: np.ndarray
    elevation: np.ndarray
    slant_range: np.ndarray

    @property
    def pass_id(self) -> str:
        return f"{self.station_id}-{self.number:05d}"

    @property
    def duration(self) -> float:
        return self.los - self.aos

    @property
    def max_elevation(self) -> float:
        return float(self.elevation.max())

    @property
    def samples(self) -> list[TopocentricState]:
        return [TopocentricState(float(t), float(a), float(e), float(r))
                for t, a, e, r in zip(self.times, self.azimuth, self.elevation, self.slant_range)]

    @property
    def aos_datetime(self):
        return from_seconds(self.aos)

    @property
    def los_datetime(self):
        return from_seconds(self.los)


@dataclass(frozen=True)
class PassStatistics:
    count: int
    total_duration: float
    mean_duration: float | None
    mean_max_elevation: float | None


def _refine(elev_fn, outside: np.ndarray, inside: np.ndarray, mask: float) -> np.ndarray:
    """Bisect each (outside, inside) bracket; return the inside end, within REFINE_TOL of the crossing."""
    outside, inside = outside.astype(float).copy(), inside.astype(float).copy()
    if outside.size == 0:
        return inside
    n_iter = int(math.ceil(math.log2(max(np.max(np.abs(inside - outside)), REFINE_TOL) / REFINE_TOL)))
    for _ in range(n_iter):
        mid = 0.5 * (outside + inside)
        up = elev_fn(mid) >= mask
        inside = np.where(up, mid, inside)
        outside = np.where(up, outside, mid)
    return inside


def _peak(elev_fn, lo: np.ndarray, hi: np.ndarray, iterations: int = 60):
    """Golden-section search for the elevation maximum inside each [lo, hi]."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.astype(float).copy(), hi.astype(float).copy()
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = elev_fn(c), elev_fn(d)
    for _ in range(iterations):
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - g * (b - a)
        new_d = a + g * (b - a)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc_new = elev_fn(np.where(left, new_c, new_d))
        fc, fd = np.where(left, fc_new, fd), np.where(left, fc, fc_new)
    t = 0.5 * (a + b)
    return t, elev_fn(t)


def find_passes(tle: TwoLineElements, site: GeodeticSite, window, min_elevation: float,
                station_id: str = "", coarse_step: float = COARSE_STEP,
                sample_step: float = SAMPLE_STEP) -> list[Pass]:
    """Passes of `tle` over `site` with elevation >= min_elevation, clipped to `window`."""
    start, end = (to_seconds(w) for w in window)
    if not 0.0 <= min_elevation < 90.0:
        raise InvalidThreshold(f"minimum elevation {min_elevation} outside [0, 90)")
    if end < start:
        raise ValueError("window end precedes start")
    if end - start > MAX_WINDOW_DAYS * DAY:
        raise WindowTooLarge(f"window of {(end - start) / DAY:.1f} days exceeds {MAX_WINDOW_DAYS:.0f}")
    if end == start:
        return []

    def elev(t):
        return elevation_profile(tle, site, t)[1]

    n = int(math.ceil((end - start) / coarse_step))
    grid = start + coarse_step * np.arange(n + 1, dtype=float)
    grid[-1] = end
    el = elev(grid)
    up = el >= min_elevation

    rise = np.flatnonzero(up[1:] & ~up[:-1]) + 1
    sets = np.flatnonzero(up[:-1] & ~up[1:])
    aos = _refine(elev, grid[rise - 1], grid[rise], min_elevation)
    los = _refine(elev, grid[sets + 1], grid[sets], min_elevation)
    if up[0]:
        aos = np.concatenate([[start], aos])
    if up[-1]:
        los = np.concatenate([los, [end]])
    intervals = list(zip(aos.tolist(), los.tolist()))

    # grazing passes that peak above the mask between two coarse samples
    k = np.arange(1, len(grid) - 1)
    cand = k[(el[k] >= el[k - 1]) & (el[k] >= el[k + 1]) & ~up[k]
             & (el[k] > min_elevation - GRAZING_MARGIN)]
    if cand.size:
        tpk, epk = _peak(elev, grid[cand - 1], grid[cand + 1])
        hit = epk >= min_elevation
        if np.any(hit):
            a = _refine(elev, grid[cand - 1][hit], tpk[hit], min_elevation)
            b = _refine(elev, grid[cand + 1][hit], tpk[hit], min_elevation)
            intervals.extend(zip(a.tolist(), b.tolist()))
    intervals.sort()

    passes = []
    for a, b in intervals:
        if b < a:
            continue
        inner = np.arange(math.floor(a / sample_step) + 1, math.ceil(b / sample_step)) * sample_step
        t = np.concatenate([[a], inner[(inner > a) & (inner < b)], [b]]) if b > a else np.array([a])
        az, e, rng = elevation_profile(tle, site, t)
        keep = e >= min_elevation
        if not np.any(keep):
            continue
        passes.append(Pass(station_id, len(passes), a, b, t[keep], az[keep], e[keep], rng[keep]))
    return passes


def pass_statistics(passes) -> PassStatistics:
    if not passes:
        return PassStatistics(0, 0.0, None, None)
    durations = [p.duration for p in passes]
    total = float(sum(durations))
    return PassStatistics(len(passes), total, total / len(passes),
                          float(np.mean([p.max_elevation for p in passes])))
