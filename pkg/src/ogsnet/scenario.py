"""Scenario files, data joining and configuration sweeps.

A scenario file is line oriented::

    # comment
    [satellite]
    tle_file = terrasarx.tle
    wavelength = 1550 nm

    [station:madrid]
    lat = 40.45 deg
    size_class = mobile

    [config:config1]
    stations = tenerife, madrid

Numeric values may carry a unit suffix; bare numbers are read in the key's SI
unit. Relative paths resolve against the scenario file's directory.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import (
    AvailabilityReport, BufferState, StationLink, ThroughputSummary, availability_series,
    buffer_simulate, contacts_from_throughput, throughput,
)
from .errors import ConfigError, MissingKey, SpanMismatch, UnitError
from .linkbudget import LinkEnvironment, NoiseSpec, TerminalSpec
from .orbit import EPOCH_WARN_DAYS, GeodeticSite, TwoLineElements, read_tle_file
from .passes import Pass, find_passes
from .timeutil import DAY, format_iso, to_seconds
from .weather import (
    WeatherSeries, load_grid_series, load_turbulence_map, read_weather_csv,
    station_cloud_series, station_turbulence, synth_weather,
)

log = logging.getLogger(__name__)

SIZE_CLASS_APERTURE = {"large": 1.0, "mobile": 0.4}  # m

# ---------------------------------------------------------------------------
# units

_UNITS = {
    "length": {"m": 1.0, "km": 1e3, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "angle": {"deg": 1.0, "rad": 180.0 / math.pi, "mrad": 0.18 / math.pi, "urad": 1.8e-4 / math.pi},
    "small_angle": {"rad": 1.0, "mrad": 1e-3, "urad": 1e-6, "deg": math.pi / 180.0},
    "db": {"dB": 1.0},
    "dbw": {"dBW": 1.0, "dBm": 1.0, "W": None, "mW": None},
    "temperature": {"K": 1.0},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "bits": {"b": 1.0, "bit": 1.0, "kb": 1e3, "Mb": 1e6, "Gb": 1e9, "Tb": 1e12},
    "rate": {"bps": 1.0, "bit/s": 1.0, "kbps": 1e3, "Mbps": 1e6, "Gbps": 1e9, "Tbps": 1e12,
             "b/day": 1 / DAY, "Mb/day": 1e6 / DAY, "Gb/day": 1e9 / DAY, "Tb/day": 1e12 / DAY},
    "km": {"km": 1.0, "m": 1e-3},
    "duration": {"s": 1.0, "min": 60.0, "h": 3600.0, "day": DAY},
    "fraction": {"": 1.0, "%": 0.01},
    "number": {"": 1.0},
}
_NUM_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)$")


def parse_quantity(text: str, kind: str, key: str = "", line=None) -> float:
    m = _NUM_RE.match(text.strip())
    if not m:
        raise ConfigError(f"not a number: {text!r}", key, line)
    value, unit = float(m.group(1)), m.group(2)
    table = _UNITS[kind]
    if unit == "" and "" not in table:
        return value  # bare number: SI/base unit
    if unit not in table:
        raise UnitError(f"unit {unit!r} not valid here (expected one of {', '.join(u for u in table if u)})",
                        key, line)
    if kind == "dbw":
        if unit == "dBm":
            return value - 30.0
        if unit in ("W", "mW"):
            watts = value * (1e-3 if unit == "mW" else 1.0)
            if watts <= 0:
                raise ConfigError("power must be positive", key, line)
            return 10.0 * math.log10(watts)
    return value * table[unit]


# ---------------------------------------------------------------------------
# raw file parsing

_FIXED_SECTIONS = ("satellite", "noise", "defaults", "simulation")


@dataclass
class _Entry:
    value: str
    line: int | None


def parse_sections(text: str, path=None) -> dict[str, dict[str, _Entry]]:
    sections: dict[str, dict[str, _Entry]] = {}
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"malformed section header {s!r}", line=n, path=path)
            current = s[1:-1].strip()
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", key=current, line=n, path=path)
            sections[current] = {}
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", line=n, path=path)
        if current is None:
            raise ConfigError("key outside any section", line=n, path=path)
        key, value = (x.strip() for x in s.split("=", 1))
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r}", key=f"{current}.{key}", line=n, path=path)
        sections[current][key] = _Entry(value, n)
    return sections


def apply_overrides(sections, overrides) -> None:
    """Apply 'section.key=value' strings. Station and config sections must already exist."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not 'section.key=value'")
        lhs, value = (x.strip() for x in item.split("=", 1))
        if "." not in lhs:
            raise ConfigError(f"override {item!r} is not 'section.key=value'")
        sec, key = lhs.rsplit(".", 1)
        if sec not in sections:
            if sec not in _FIXED_SECTIONS:
                raise ConfigError(f"override names unknown section [{sec}]", key=lhs)
            sections[sec] = {}
        sections[sec][key] = _Entry(value, None)


# ---------------------------------------------------------------------------
# schema

_SATELLITE = {
    "tle_file": ("path", None), "name": ("str", ""),
    "tx_power": ("dbw", 0.0), "wavelength": ("length", 1550e-9), "tx_aperture": ("length", 0.1),
    "efficiency": ("fraction", 0.6), "beam_divergence": ("small_angle", 15e-6),
    "pointing_error": ("small_angle", 1e-6), "generation_rate": ("rate", 1.2e12 / DAY),
    "buffer": ("bits", 390e9), "c_max": ("rate", 1e9),
}
_NOISE = {"system_temperature": ("temperature", 500.0), "bandwidth": ("frequency", 1e9)}
_DEFAULTS = {
    "zenith_attenuation": ("db", 0.5), "link_margin": ("db", 3.0), "min_elevation": ("angle", 10.0),
    "box_km": ("km", 20.0), "threshold": ("fraction", 0.1), "k_cloud": ("db", 10.0),
    "turbulence_ref": ("number", 1e-17), "k_turb": ("db", 3.0),
}
_SIMULATION = {
    "start": ("time", None), "end": ("time", None), "cadence": ("duration", 900.0),
    "normalize": ("choice:largest,none", "none"), "weather": ("choice:synthetic,grid,csv", "synthetic"),
    "weather_file": ("path", ""), "seed": ("int", 0), "turbulence_map": ("path", ""),
    "exclusive": ("bool", True),
}
_STATION = {
    "name": ("str", ""), "lat": ("angle", None), "lon": ("angle", None), "alt": ("length", 0.0),
    "size_class": ("choice:large,mobile", "mobile"), "rx_aperture": ("length", ""),
    "min_elevation": ("angle", ""), "box_km": ("km", ""), "cloud_prob": ("fraction", ""),
}


def _convert(kind, entry: _Entry, key, path, base: Path):
    text = entry.value
    try:
        if kind == "str":
            return text
        if kind == "path":
            return str((base / text).resolve()) if text else ""
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigError(f"not a boolean: {text!r}", key, entry.line, path)
            return low in ("true", "yes", "1")
        if kind == "time":
            return to_seconds(text)
        if kind.startswith("choice:"):
            options = kind.split(":", 1)[1].split(",")
            if text not in options:
                raise ConfigError(f"{text!r} not one of {options}", key, entry.line, path)
            return text
        return parse_quantity(text, kind, key, entry.line)
    except ConfigError as exc:
        if exc.path is None and path is not None:
            raise type(exc)(exc.message, exc.key, exc.line, path) from None
        raise
    except ValueError:
        raise ConfigError(f"cannot read {text!r}", key, entry.line, path) from None


def _read_section(raw: dict, schema: dict, section: str, path, base: Path) -> dict:
    out = {}
    for key, entry in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", f"{section}.{key}", entry.line, path)
    for key, (kind, default) in schema.items():
        if key in raw:
            out[key] = _convert(kind, raw[key], f"{section}.{key}", path, base)
        elif default is None:
            raise MissingKey("required key missing", f"{section}.{key}", None, path)
        else:
            out[key] = None if default == "" and kind != "path" and kind != "str" else default
    return out


# ---------------------------------------------------------------------------
# domain objects

@dataclass(frozen=True)
class GroundStation:
    id: str
    name: str
    site: GeodeticSite
    size_class: str
    rx_aperture: float
    min_elevation: float
    box_km: float
    cloud_prob: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.min_elevation < 90.0:
            raise ConfigError(f"min_elevation {self.min_elevation} outside [0, 90)", f"station:{self.id}")
        if self.size_class not in SIZE_CLASS_APERTURE:
            raise ConfigError(f"unknown size class {self.size_class!r}", f"station:{self.id}")


@dataclass(frozen=True)
class NetworkConfiguration:
    name: str
    station_ids: tuple[str, ...]


@dataclass(frozen=True)
class Scenario:
    path: str
    tle: TwoLineElements
    stations: tuple[GroundStation, ...]
    configurations: tuple[NetworkConfiguration, ...]
    window: tuple[float, float]
    threshold: float
    terminal: TerminalSpec  # satellite side; rx_aperture is replaced per station
    noise: NoiseSpec
    environment: LinkEnvironment
    generation_rate: float
    buffer_capacity: float
    c_max: float
    cadence: float = 900.0
    normalize: str = "none"
    weather_source: str = "synthetic"
    weather_file: str = ""
    seed: int = 0
    turbulence_map: str = ""
    exclusive: bool = True

    def station(self, station_id: str) -> GroundStation:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)

    def terminal_for(self, station: GroundStation) -> TerminalSpec:
        return replace(self.terminal, rx_aperture=station.rx_aperture)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed))


def load_scenario(path, overrides=None) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", path=str(path)) from None
    return parse_scenario(text, path.parent, str(path), overrides)


def parse_scenario(text: str, base=".", path=None, overrides=None) -> Scenario:
    base = Path(base)
    raw = parse_sections(text, path)
    apply_overrides(raw, overrides)
    for sec in raw:
        if sec not in _FIXED_SECTIONS and not sec.startswith(("station:", "config:")):
            raise ConfigError(f"unknown section [{sec}]", key=sec, path=path)
    for required in ("satellite", "simulation"):
        if required not in raw:
            raise MissingKey(f"section [{required}] missing", key=required, path=path)
    sat = _read_section(raw["satellite"], _SATELLITE, "satellite", path, base)
    noise = _read_section(raw.get("noise", {}), _NOISE, "noise", path, base)
    dflt = _read_section(raw.get("defaults", {}), _DEFAULTS, "defaults", path, base)
    sim = _read_section(raw["simulation"], _SIMULATION, "simulation", path, base)

    stations, seen = [], set()
    for sec, body in raw.items():
        if not sec.startswith("station:"):
            continue
        sid = sec.split(":", 1)[1].strip()
        if not sid or sid in seen:
            raise ConfigError(f"duplicate or empty station id {sid!r}", key=sec, path=path)
        seen.add(sid)
        v = _read_section(body, _STATION, sec, path, base)
        try:
            site = GeodeticSite(v["lat"], v["lon"], v["alt"])
        except ValueError as exc:
            raise ConfigError(str(exc), key=sec, path=path) from None
        stations.append(GroundStation(
            sid, v["name"] or sid, site, v["size_class"],
            v["rx_aperture"] if v["rx_aperture"] is not None else SIZE_CLASS_APERTURE[v["size_class"]],
            v["min_elevation"] if v["min_elevation"] is not None else dflt["min_elevation"],
            v["box_km"] if v["box_km"] is not None else dflt["box_km"],
            v["cloud_prob"]))
    if not stations:
        raise MissingKey("scenario defines no [station:<id>] section", path=path)

    configs, names = [], set()
    for sec, body in raw.items():
        if not sec.startswith("config:"):
            continue
        name = sec.split(":", 1)[1].strip()
        if name in names:
            raise ConfigError(f"duplicate configuration {name!r}", key=sec, path=path)
        names.add(name)
        for key, entry in body.items():
            if key != "stations":
                raise ConfigError(f"unknown key {key!r}", f"{sec}.{key}", entry.line, path)
        if "stations" not in body:
            raise MissingKey("required key missing", f"{sec}.stations", path=path)
        entry = body["stations"]
        ids = tuple(x.strip() for x in entry.value.split(",") if x.strip())
        if not ids:
            raise ConfigError("configuration lists no stations", f"{sec}.stations", entry.line, path)
        if len(set(ids)) != len(ids):
            raise ConfigError("configuration repeats a station", f"{sec}.stations", entry.line, path)
        for sid in ids:
            if sid not in seen:
                raise ConfigError(f"unknown station {sid!r}", f"{sec}.stations", entry.line, path)
        configs.append(NetworkConfiguration(name, ids))
    if not configs:
        raise MissingKey("scenario defines no [config:<name>] section", path=path)

    if not sat["tle_file"]:
        raise MissingKey("required key missing", "satellite.tle_file", path=path)
    try:
        tles = read_tle_file(sat["tle_file"])
    except OSError as exc:
        raise ConfigError(f"cannot read TLE file: {exc.strerror}", "satellite.tle_file", path=path) from None
    if sat["name"]:
        match = [t for t in tles if t.name == sat["name"]]
        if not match:
            raise ConfigError(f"no element set named {sat['name']!r}", "satellite.name", path=path)
        tle = match[0]
    else:
        tle = tles[0]

    start, end = sim["start"], sim["end"]
    if not start < end:
        raise ConfigError("simulation window is empty", "simulation.end", raw["simulation"]["end"].line, path)
    if sim["weather"] != "synthetic" and not sim["weather_file"]:
        raise MissingKey(f"weather = {sim['weather']} needs weather_file", "simulation.weather_file", path=path)
    if sim["weather"] == "synthetic":
        for s in stations:
            if s.cloud_prob is None:
                raise MissingKey("synthetic weather needs cloud_prob", f"station:{s.id}.cloud_prob", path=path)
    threshold = dflt["threshold"]
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"threshold {threshold} outside (0, 1]", "defaults.threshold", path=path)
    if max(end, start) - tle.epoch_seconds > EPOCH_WARN_DAYS * DAY:
        log.warning("scenario window reaches %.0f days past the element-set epoch",
                    (end - tle.epoch_seconds) / DAY)

    try:
        terminal = TerminalSpec(sat["tx_power"], sat["wavelength"], sat["tx_aperture"],
                                SIZE_CLASS_APERTURE["mobile"], sat["efficiency"],
                                sat["beam_divergence"], sat["pointing_error"])
        noise_spec = NoiseSpec(noise["system_temperature"], noise["bandwidth"])
        env = LinkEnvironment(dflt["zenith_attenuation"], 0.0, None, dflt["link_margin"], threshold,
                              dflt["k_cloud"], dflt["turbulence_ref"], dflt["k_turb"])
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None
    if sat["c_max"] <= 0 or sat["buffer"] <= 0 or sat["generation_rate"] < 0:
        raise ConfigError("c_max and buffer must be positive, generation_rate non-negative", "satellite", path=path)

    return Scenario(
        path or "", tle, tuple(stations), tuple(configs), (start, end), threshold, terminal, noise_spec,
        env, sat["generation_rate"], sat["buffer"], sat["c_max"], sim["cadence"], sim["normalize"],
        sim["weather"], sim["weather_file"], sim["seed"], sim["turbulence_map"], sim["exclusive"])


# ---------------------------------------------------------------------------
# data joining

@dataclass(frozen=True, eq=False)
class JoinedStation:
    station: GroundStation
    passes: tuple[Pass, ...]
    weather: WeatherSeries
    pass_cloud: tuple[np.ndarray, ...]  # step-held cloud fraction at every pass sample


@dataclass(frozen=True, eq=False)
class JoinedDataset:
    scenario: Scenario
    stations: dict  # id -> JoinedStation, catalog order

    def for_configuration(self, config: NetworkConfiguration) -> list[JoinedStation]:
        order = [s.id for s in self.scenario.stations if s.id in config.station_ids]
        return [self.stations[sid] for sid in order]


def load_weather(scenario: Scenario) -> dict[str, WeatherSeries]:
    ids = [s.id for s in scenario.stations]
    if scenario.weather_source == "synthetic":
        series = synth_weather([s.cloud_prob for s in scenario.stations], scenario.window,
                               scenario.cadence, scenario.seed, ids)
        out = dict(zip(ids, series))
    elif scenario.weather_source == "grid":
        grid = load_grid_series(scenario.weather_file)
        out = {s.id: station_cloud_series(grid, s.site, s.box_km, s.id) for s in scenario.stations}
    else:
        out = {s.station_id: s for s in read_weather_csv(scenario.weather_file)}
    if scenario.turbulence_map:
        tmap = load_turbulence_map(scenario.turbulence_map)
        out = {sid: (w.with_turbulence(station_turbulence(tmap, scenario.station(sid).site))
                     if sid in ids else w) for sid, w in out.items()}
    return out


def integrate(scenario: Scenario, weather: dict | None = None) -> JoinedDataset:
    """Join passes and weather per station. Weather defaults to the scenario's own source."""
    if weather is None:
        weather = load_weather(scenario)
    start, end = scenario.window
    joined = {}
    for st in scenario.stations:
        w = weather.get(st.id)
        if w is None:
            raise SpanMismatch(f"{st.id}: no weather data; uncovered interval "
                               f"{format_iso(start)}..{format_iso(end)}")
        if not w.covers(start, end):
            lo, hi = w.span
            gaps = []
            if lo > start:
                gaps.append(f"{format_iso(start)}..{format_iso(min(lo, end))}")
            if hi < end:
                gaps.append(f"{format_iso(max(hi, start))}..{format_iso(end)}")
            raise SpanMismatch(f"{st.id}: weather does not cover {'; '.join(gaps)}")
        passes = tuple(find_passes(scenario.tle, st.site, scenario.window, st.min_elevation, st.id))
        clouds = tuple(w.cloud_at(p.times) for p in passes)
        joined[st.id] = JoinedStation(st, passes, w, clouds)
    return JoinedDataset(scenario, joined)


# ---------------------------------------------------------------------------
# sweep

@dataclass(frozen=True, eq=False)
class ConfigurationResult:
    name: str
    station_ids: tuple[str, ...]
    availability: AvailabilityReport
    throughput: ThroughputSummary
    buffer: BufferState
    buffer_times: np.ndarray
    buffer_fill: np.ndarray
    buffer_lost: np.ndarray
    normalized_pdt: float | None  # against the reference bound chosen by `normalize`


def run_configuration(joined: JoinedDataset, config: NetworkConfiguration):
    sc = joined.scenario
    members = joined.for_configuration(config)
    avail = availability_series([m.weather for m in members], sc.threshold, sc.cadence, sc.window)
    links = [StationLink(m.station.id, m.passes, m.weather, sc.terminal_for(m.station), sc.environment)
             for m in members]
    tp = throughput(links, sc.noise, sc.c_max, exclusive=sc.exclusive)
    buf = buffer_simulate(contacts_from_throughput(tp), sc.generation_rate, sc.buffer_capacity, sc.window)
    return avail, tp, buf


def run_sweep(scenario: Scenario, joined: JoinedDataset | None = None) -> dict[str, ConfigurationResult]:
    """Evaluate every configuration; results keyed by name in file order."""
    if joined is None:
        joined = integrate(scenario)
    raw = {c.name: (c, run_configuration(joined, c)) for c in scenario.configurations}
    if scenario.normalize == "largest":
        reference = max((tp.max_bits for _, (_, tp, _) in raw.values()), default=0.0)
    else:
        reference = None
    out = {}
    for name, (c, (avail, tp, buf)) in raw.items():
        norm = tp.pdt if reference is None else tp.normalized_pdt(reference)
        out[name] = ConfigurationResult(name, c.station_ids, avail, tp, buf.final, buf.times,
                                        buf.fill, buf.lost_total, norm)
    return out
