"""Cloud-mask and turbulence grids reduced to per-station weather series.

Grid interchange format (plain text)::

    GRID <origin_lat> <origin_lon> <cell_size> <n_rows> <n_cols>
    FRAME <iso8601>
    <n_rows lines of n_cols values>
    FRAME <iso8601>
    ...

The origin is the south-west corner of cell (0, 0); row index grows
northward and column index eastward, so cell (r, c) covers latitudes
[origin_lat + r*cell, origin_lat + (r+1)*cell). Rows are listed in the file
starting with row 0. Cloud masks carry 0 (clear) or 2 (cloud); averaged
products carry fractions in [0, 1]; turbulence maps carry one frame of
positive C_n^2 values, stored verbatim.
"""
from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import GridValueError, OutOfCoverage, OutOfSpan, SchemaError, TimeOrderError
from .orbit import GeodeticSite
from .timeutil import format_iso, parse_iso, to_seconds

KM_PER_DEG = 6371.0088 * math.pi / 180.0  # mean Earth radius
DEFAULT_BOX_KM = 20.0
DEFAULT_CADENCE = 900.0  # s, the cloud product's 15-minute cadence


@dataclass(frozen=True, eq=False)
class GridSeries:
    origin_lat: float
    origin_lon: float
    cell_size: float
    n_rows: int
    n_cols: int
    times: np.ndarray  # (F,) POSIX s
    values: np.ndarray  # (F, n_rows, n_cols)

    @property
    def frames(self):
        return list(zip(self.times.tolist(), self.values))

    @property
    def lat_edges(self) -> tuple[float, float]:
        return self.origin_lat, self.origin_lat + self.n_rows * self.cell_size

    @property
    def lon_edges(self) -> tuple[float, float]:
        return self.origin_lon, self.origin_lon + self.n_cols * self.cell_size

    def contains(self, lat: float, lon: float) -> bool:
        (la0, la1), (lo0, lo1) = self.lat_edges, self.lon_edges
        return la0 <= lat <= la1 and lo0 <= lon <= lo1


@dataclass(frozen=True, eq=False)
class TurbulenceMap:
    origin_lat: float
    origin_lon: float
    cell_size: float
    n_rows: int
    n_cols: int
    values: np.ndarray  # (n_rows, n_cols) C_n^2


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    """Step-held cloud fraction samples plus a static turbulence value for one station."""

    station_id: str
    times: np.ndarray
    cloud: np.ndarray
    turbulence: float | None = None
    span_end: float | None = None  # last sample holds until here; defaults to one cadence past it

    def __post_init__(self):
        times = np.asarray(self.times, float)
        cloud = np.asarray(self.cloud, float)
        if times.shape != cloud.shape or times.ndim != 1 or times.size == 0:
            raise SchemaError("weather series needs matching non-empty time and cloud arrays")
        if np.any(np.diff(times) <= 0):
            raise TimeOrderError(f"{self.station_id}: timestamps not strictly increasing")
        if np.any((cloud < 0) | (cloud > 1)) or np.any(np.isnan(cloud)):
            raise GridValueError(f"{self.station_id}: cloud fraction outside [0, 1]")
        if self.turbulence is not None and not self.turbulence > 0:
            raise GridValueError(f"{self.station_id}: turbulence must be positive")
        end = self.span_end
        if end is None:
            end = times[-1] + (times[-1] - times[-2] if times.size > 1 else 0.0)
        for arr in (times, cloud):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "cloud", cloud)
        object.__setattr__(self, "span_end", float(end))

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), self.span_end

    def covers(self, start: float, end: float) -> bool:
        return self.times[0] <= start and end <= self.span_end

    def cloud_at(self, t) -> np.ndarray | float:
        """Cloud fraction of the latest sample at or before t."""
        scalar = np.isscalar(t) or not hasattr(t, "__len__")
        ts = np.atleast_1d(np.asarray(t if not scalar else to_seconds(t), float))
        if np.any(ts < self.times[0]) or np.any(ts > self.span_end):
            raise OutOfSpan(f"{self.station_id}: time outside weather span "
                            f"{format_iso(self.times[0])}..{format_iso(self.span_end)}")
        idx = np.searchsorted(self.times, ts, side="right") - 1
        out = self.cloud[idx]
        return float(out[0]) if scalar else out

    def with_turbulence(self, value: float) -> "WeatherSeries":
        return WeatherSeries(self.station_id, self.times, self.cloud, value, self.span_end)


# ---------------------------------------------------------------------------
# interchange format

def _read_grid(path):
    with open(path, encoding="utf-8") as fh:
        lines = [(i + 1, ln.split()) for i, ln in enumerate(fh)]
    lines = [(n, toks) for n, toks in lines if toks]
    if not lines or lines[0][1][0] != "GRID" or len(lines[0][1]) != 6:
        raise SchemaError(f"{path}: first line must be 'GRID origin_lat origin_lon cell_size n_rows n_cols'")
    toks = lines[0][1]
    try:
        olat, olon, cell = (float(x) for x in toks[1:4])
        n_rows, n_cols = int(toks[4]), int(toks[5])
    except ValueError:
        raise SchemaError(f"{path}:1: malformed GRID header") from None
    if cell <= 0 or n_rows <= 0 or n_cols <= 0:
        raise SchemaError(f"{path}:1: cell size and grid shape must be positive")

    times, frames, i = [], [], 1
    while i < len(lines):
        lineno, toks = lines[i]
        if toks[0] != "FRAME" or len(toks) != 2:
            raise SchemaError(f"{path}:{lineno}: expected 'FRAME <iso8601>'")
        try:
            times.append(to_seconds(parse_iso(toks[1])))
        except ValueError:
            raise SchemaError(f"{path}:{lineno}: bad timestamp {toks[1]!r}") from None
        rows = lines[i + 1:i + 1 + n_rows]
        if len(rows) != n_rows or any(r[1][0] == "FRAME" for r in rows):
            raise SchemaError(f"{path}:{lineno}: frame has fewer than {n_rows} rows")
        block = []
        for rn, rt in rows:
            if len(rt) != n_cols:
                raise SchemaError(f"{path}:{rn}: expected {n_cols} values, got {len(rt)}")
            try:
                block.append([float(x) for x in rt])
            except ValueError:
                raise SchemaError(f"{path}:{rn}: non-numeric value") from None
        frames.append(block)
        i += 1 + n_rows
    if not frames:
        raise SchemaError(f"{path}: no frames")
    times = np.asarray(times, float)
    if np.any(np.diff(times) <= 0):
        bad = int(np.flatnonzero(np.diff(times) <= 0)[0]) + 1
        raise TimeOrderError(f"{path}: frame {bad} ({format_iso(times[bad])}) is not after its predecessor")
    return olat, olon, cell, n_rows, n_cols, times, np.asarray(frames, float)


def load_grid_series(path) -> GridSeries:
    """Load and validate a cloud grid; every cell must be 0, 2 or a fraction in [0, 1]."""
    olat, olon, cell, n_rows, n_cols, times, values = _read_grid(path)
    ok = (values == 2.0) | ((values >= 0.0) & (values <= 1.0))
    if not np.all(ok):
        f, r, c = (int(x[0]) for x in np.nonzero(~ok))
        raise GridValueError(f"{path}: frame {f} cell ({r}, {c}) = {values[f, r, c]} is not 0, 2 or in [0, 1]")
    values.setflags(write=False)
    times.setflags(write=False)
    return GridSeries(olat, olon, cell, n_rows, n_cols, times, values)


def load_turbulence_map(path) -> TurbulenceMap:
    olat, olon, cell, n_rows, n_cols, _, values = _read_grid(path)
    if values.shape[0] != 1:
        raise SchemaError(f"{path}: turbulence map must contain exactly one frame")
    if not np.all(values > 0):
        raise GridValueError(f"{path}: turbulence values must be positive")
    return TurbulenceMap(olat, olon, cell, n_rows, n_cols, values[0])


def _fmt(v: float) -> str:
    return repr(float(v)) if v != int(v) else str(int(v))


def write_grid(path, origin_lat, origin_lon, cell_size, times, frames) -> None:
    frames = np.asarray(frames, float)
    n_rows, n_cols = frames.shape[1:]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"GRID {_fmt(origin_lat)} {_fmt(origin_lon)} {_fmt(cell_size)} {n_rows} {n_cols}\n")
        for t, frame in zip(times, frames):
            fh.write(f"FRAME {format_iso(t)}\n")
            for row in frame:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# reductions

def box_cells(grid, site: GeodeticSite, box_km: float):
    """Row and column indices of cells whose centres fall inside the box around site."""
    if box_km <= 0:
        raise ValueError("box size must be positive")
    la0, la1 = grid.origin_lat, grid.origin_lat + grid.n_rows * grid.cell_size
    lo0, lo1 = grid.origin_lon, grid.origin_lon + grid.n_cols * grid.cell_size
    if not (la0 <= site.latitude <= la1 and lo0 <= site.longitude <= lo1):
        raise OutOfCoverage(f"site ({site.latitude}, {site.longitude}) outside grid")
    half_lat = box_km / 2.0 / KM_PER_DEG
    half_lon = half_lat / math.cos(math.radians(site.latitude))
    if (site.latitude - half_lat < la0 or site.latitude + half_lat > la1
            or site.longitude - half_lon < lo0 or site.longitude + half_lon > lo1):
        raise OutOfCoverage(f"{box_km} km box around ({site.latitude}, {site.longitude}) leaves the grid")
    clat = grid.origin_lat + (np.arange(grid.n_rows) + 0.5) * grid.cell_size
    clon = grid.origin_lon + (np.arange(grid.n_cols) + 0.5) * grid.cell_size
    rows = np.flatnonzero(np.abs(clat - site.latitude) <= half_lat)
    cols = np.flatnonzero(np.abs(clon - site.longitude) <= half_lon)
    if rows.size == 0 or cols.size == 0:
        raise OutOfCoverage(f"no cell centre inside the {box_km} km box around "
                            f"({site.latitude}, {site.longitude})")
    return rows, cols


def station_cloud_series(grid: GridSeries, site: GeodeticSite, box_km: float = DEFAULT_BOX_KM,
                         station_id: str = "") -> WeatherSeries:
    """Per-frame mean cloud fraction over the box (mask value 2 counts as 1)."""
    rows, cols = box_cells(grid, site, box_km)
    sel = grid.values[:, rows][:, :, cols]
    sel = np.where(sel == 2.0, 1.0, sel)
    cloud = sel.sum(axis=(1, 2)) / (rows.size * cols.size)
    return WeatherSeries(station_id, grid.times, cloud)


def station_turbulence(tmap: TurbulenceMap, site: GeodeticSite) -> float:
    """C_n^2 of the cell containing the site; on a shared edge the lower row, then lower column, wins."""
    def index(coord, origin, n):
        x = round((coord - origin) / tmap.cell_size, 9)
        if x < 0 or x > n:
            raise OutOfCoverage(f"site ({site.latitude}, {site.longitude}) outside turbulence map")
        return min(max(math.ceil(x) - 1, 0), n - 1)

    r = index(site.latitude, tmap.origin_lat, tmap.n_rows)
    c = index(site.longitude, tmap.origin_lon, tmap.n_cols)
    return float(tmap.values[r, c])


def cflos(series: WeatherSeries, t, threshold: float) -> bool:
    """Cloud-free line of sight: step-held cloud fraction strictly below the threshold."""
    return bool(series.cloud_at(t) < threshold)


def station_seed(seed: int, station_id: str) -> np.random.Generator:
    """Per-station stream keyed by id, so draws do not depend on catalog order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(station_id.encode())]))


def synth_weather(per_station_cloud_prob, span, cadence: float, rng_seed: int,
                  station_ids=None) -> list[WeatherSeries]:
    """Independent Bernoulli cloud (1) / clear (0) draws per station and sample."""
    start, end = (to_seconds(s) for s in span)
    if cadence <= 0:
        raise ValueError("cadence must be positive")
    probs = [float(p) for p in per_station_cloud_prob]
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise ValueError("cloud probabilities must lie in [0, 1]")
    if station_ids is None:
        station_ids = [f"S{i}" for i in range(len(probs))]
    n = int(math.ceil((end - start) / cadence))
    times = start + cadence * np.arange(n, dtype=float)
    out = []
    for sid, p in zip(station_ids, probs):
        draws = station_seed(rng_seed, sid).random(n)
        out.append(WeatherSeries(sid, times, (draws < p).astype(float), span_end=end))
    return out


# ---------------------------------------------------------------------------
# station series CSV: timestamp column then one cloud-fraction column per station

def write_weather_csv(path, series) -> None:
    times = series[0].times
    if any(s.times.shape != times.shape or np.any(s.times != times) for s in series):
        raise SchemaError("series must share timestamps to be written side by side")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + [s.station_id for s in series])
        for i, t in enumerate(times):
            w.writerow([format_iso(t)] + [_fmt(s.cloud[i]) for s in series])


def read_weather_csv(path, span_end=None) -> list[WeatherSeries]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "timestamp" or len(rows[0]) < 2:
        raise SchemaError(f"{path}: header must be 'timestamp,<station>,...'")
    ids = rows[0][1:]
    try:
        times = np.array([to_seconds(r[0]) for r in rows[1:]], float)
        data = np.array([[float(x) for x in r[1:]] for r in rows[1:]], float)
    except (ValueError, IndexError):
        raise SchemaError(f"{path}: malformed row") from None
    if data.shape != (len(times), len(ids)):
        raise SchemaError(f"{path}: ragged rows")
    return [WeatherSeries(sid, times, data[:, j], span_end=span_end) for j, sid in enumerate(ids)]
