"""Command-line front end: ``ogsnet <subcommand> --scenario FILE --out DIR``.

Exit status: 0 success, 1 usage error, 2 data or configuration error,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from types import SimpleNamespace

from . import reports
from .analysis import pearson_cloud_correlation
from .errors import InvariantViolation, SimulationError
from .linkbudget import link_budget, slant_range_for_elevation
from .orbit import EARTH_RADIUS
from .passes import find_passes
from .scenario import Scenario, integrate, load_scenario, load_weather, run_sweep
from .weather import write_weather_csv

log = logging.getLogger("ogsnet")

SUBCOMMANDS = ("passes", "weather-stats", "linkbudget", "availability", "throughput",
               "correlate", "sweep", "synth-weather")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario configuration file")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a scenario value; repeatable")
    common.add_argument("--seed", type=int, help="random seed for synthetic weather")
    common.add_argument("--min-elevation", type=float, help="elevation mask for every station, degrees")
    common.add_argument("--threshold", type=float, help="cloud-fraction threshold for line of sight")
    common.add_argument("--config", action="append", default=[], metavar="NAME",
                        help="restrict to a named network configuration; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ogsnet", description="Optical ground-station network simulator.")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    helps = {
        "passes": "predict passes per station -> passes.csv",
        "weather-stats": "per-station cloud statistics -> weather_stats.csv, weather.csv",
        "linkbudget": "clear-sky link budget per station -> linkbudget.csv",
        "availability": "network availability -> availability_monthly.csv",
        "throughput": "data throughput and buffer -> throughput_monthly.csv, per_pass.csv, buffer.csv",
        "correlate": "pairwise cloud correlation -> correlation.csv",
        "sweep": "all configurations: every table, summary.csv and SVG charts",
        "synth-weather": "write the synthetic weather series -> weather.csv",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _scenario(args) -> Scenario:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"simulation.seed={args.seed}")
    if args.threshold is not None:
        overrides.append(f"defaults.threshold={args.threshold}")
    sc = load_scenario(args.scenario, overrides)
    if args.min_elevation is not None:
        mask = [f"station:{s.id}.min_elevation={args.min_elevation}" for s in sc.stations]
        sc = load_scenario(args.scenario, overrides + mask)
    if args.config:
        known = {c.name for c in sc.configurations}
        missing = [c for c in args.config if c not in known]
        if missing:
            raise UsageError(f"unknown configuration(s): {', '.join(missing)}")
        sc = replace(sc, configurations=tuple(c for c in sc.configurations if c.name in args.config))
    return sc


def _stations_in_use(sc: Scenario):
    used = {sid for c in sc.configurations for sid in c.station_ids}
    return [s for s in sc.stations if s.id in used]


def cmd_passes(sc, out):
    by_station = {s.id: find_passes(sc.tle, s.site, sc.window, s.min_elevation, s.id) for s in _stations_in_use(sc)}
    return [reports.write_passes(out, by_station)]


def cmd_weather_stats(sc, out):
    weather = load_weather(sc)
    stations = _stations_in_use(sc)
    rows = []
    for s in stations:
        w = weather[s.id]
        clear = (w.cloud < sc.threshold).mean()
        rows.append([s.id, w.times.size, w.cloud.mean(), 100.0 * clear, w.turbulence])
    paths = [reports.write_csv(out / "weather_stats.csv",
                               ["station_id", "samples", "mean_cloud_fraction", "cflos_pct", "turbulence_cn2"], rows)]
    series = [weather[s.id] for s in stations]
    try:
        write_weather_csv(out / "weather.csv", series)
        paths.append(out / "weather.csv")
    except SimulationError:
        log.warning("station series use different timestamps; weather.csv not written")
    return paths


def cmd_linkbudget(sc, out):
    altitude = sc.tle.semi_major_axis - EARTH_RADIUS
    rows = []
    for s in _stations_in_use(sc):
        for elev in sorted({s.min_elevation or 1.0, 30.0, 90.0}):
            if elev <= 0:
                continue
            rng = slant_range_for_elevation(elev, altitude)
            geom = SimpleNamespace(elevation=elev, slant_range=rng)
            r = link_budget(sc.terminal_for(s), sc.noise, sc.environment, geom)
            rows.append([s.id, elev, rng, r.fspl, r.gain_tx, r.gain_rx, r.pointing_loss, r.atmospheric_loss,
                         r.cloud_loss, r.turbulence_loss, r.link_margin, r.received_power, r.snr_db,
                         r.capacity, min(r.capacity, sc.c_max)])
    header = ["station_id", "elevation_deg", "slant_range_m", "fspl_db", "gain_tx_db", "gain_rx_db",
              "pointing_loss_db", "atmospheric_loss_db", "cloud_loss_db", "turbulence_loss_db",
              "link_margin_db", "received_power_dbw", "snr_db", "capacity_bps", "rate_bps"]
    return [reports.write_csv(out / "linkbudget.csv", header, rows)]


def _results(sc):
    return run_sweep(sc, integrate(sc))


def cmd_availability(sc, out):
    return [reports.write_availability(out, _results(sc))]


def cmd_throughput(sc, out):
    results = _results(sc)
    return reports.write_throughput(out, results) + [reports.write_buffer_totals(out, results)]


def _correlation(sc):
    weather = load_weather(sc)
    stations = _stations_in_use(sc)
    if len(stations) < 2:
        return None
    return pearson_cloud_correlation([weather[s.id] for s in stations], sc.cadence)


def cmd_correlate(sc, out):
    matrix = _correlation(sc)
    if matrix is None:
        raise UsageError("correlation needs at least two stations")
    return [reports.write_correlation(out, matrix)]


def cmd_sweep(sc, out):
    joined = integrate(sc)
    results = run_sweep(sc, joined)
    matrix = _correlation(sc)
    by_station = {sid: list(js.passes) for sid, js in joined.stations.items()
                  if sid in {s.id for s in _stations_in_use(sc)}}
    paths = [reports.write_passes(out, by_station), reports.write_availability(out, results)]
    paths += reports.write_throughput(out, results)
    paths += [reports.write_buffer_totals(out, results), reports.write_summary(out, results)]
    if matrix is not None:
        paths.append(reports.write_correlation(out, matrix))
    paths += reports.write_sweep_charts(out, results, matrix)
    return paths


def cmd_synth_weather(sc, out):
    if sc.weather_source != "synthetic":
        raise UsageError("synth-weather needs a scenario with 'weather = synthetic'")
    weather = load_weather(sc)
    write_weather_csv(out / "weather.csv", [weather[s.id] for s in sc.stations])
    return [out / "weather.csv"]


COMMANDS = {
    "passes": cmd_passes, "weather-stats": cmd_weather_stats, "linkbudget": cmd_linkbudget,
    "availability": cmd_availability, "throughput": cmd_throughput, "correlate": cmd_correlate,
    "sweep": cmd_sweep, "synth-weather": cmd_synth_weather,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ogsnet: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        sc = _scenario(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for p in COMMANDS[args.command](sc, out):
            log.info("wrote %s", p)
    except UsageError as exc:
        print(f"ogsnet: error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"ogsnet: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (SimulationError, ValueError, OSError) as exc:
        print(f"ogsnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
