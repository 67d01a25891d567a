"""CSV and SVG report writers shared by the command-line front end."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .charts import render_chart
from .timeutil import format_iso


def num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not np.isfinite(v):
        return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")
    return f"{v:.12g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else num(x) for x in row])
    return path


def write_passes(out: Path, passes_by_station) -> Path:
    rows = []
    for sid, passes in passes_by_station.items():
        for p in passes:
            rows.append([sid, format_iso(p.aos), format_iso(p.los), p.duration, p.max_elevation])
    return write_csv(out / "passes.csv",
                     ["station_id", "aos_iso8601", "los_iso8601", "duration_s", "max_elevation_deg"], rows)


def write_availability(out: Path, results) -> Path:
    rows = [[name, key, pct] for name, r in results.items() for key, pct in r.availability.per_month]
    return write_csv(out / "availability_monthly.csv", ["configuration", "year_month", "availability_pct"], rows)


def write_throughput(out: Path, results) -> list[Path]:
    monthly = [[name, key, bits / 1e9] for name, r in results.items() for key, bits in r.throughput.per_month]
    per_pass = [[name, x.pass_id, x.station_id, x.rate, x.bits]
                for name, r in results.items() for x in r.throughput.per_pass]
    buffer = [[name, format_iso(t), f, lost] for name, r in results.items()
              for t, f, lost in zip(r.buffer_times, r.buffer_fill, r.buffer_lost)]
    return [
        write_csv(out / "throughput_monthly.csv", ["configuration", "year_month", "gbits"], monthly),
        write_csv(out / "per_pass.csv", ["configuration", "pass_id", "station", "c_i_bps", "bits"], per_pass),
        write_csv(out / "buffer.csv", ["configuration", "timestamp", "fill_bits", "lost_total_bits"], buffer),
    ]


def write_correlation(out: Path, matrix) -> Path:
    ids = list(matrix.station_ids)
    rows = [[sid] + [num(v) for v in matrix.r[i]] for i, sid in enumerate(ids)]
    return write_csv(out / "correlation.csv", ["station"] + ids, rows)


def write_summary(out: Path, results) -> Path:
    rows = []
    for name, r in results.items():
        rows.append([name, r.availability.overall, r.throughput.total_bits / 1e9, r.normalized_pdt,
                     r.availability.outage_pct])
    return write_csv(out / "summary.csv", ["configuration", "A_overall_pct", "T_gbits", "pdt_pct", "outage_pct"], rows)


def write_buffer_totals(out: Path, results) -> Path:
    rows = [[name, r.buffer.generated_total, r.buffer.downlinked_total, r.buffer.lost_total, r.buffer.fill]
            for name, r in results.items()]
    return write_csv(out / "buffer_totals.csv",
                     ["configuration", "generated_bits", "downlinked_bits", "lost_bits", "final_fill_bits"], rows)


def _month_axis(per_config) -> list[str]:
    return sorted({k for pairs in per_config.values() for k, _ in pairs})


def write_sweep_charts(out: Path, results, matrix=None) -> list[Path]:
    paths = []
    avail = {n: r.availability.per_month for n, r in results.items()}
    months = _month_axis(avail)
    if months:
        series = {n: [dict(v).get(m) for m in months] for n, v in avail.items()}
        p = out / "availability_monthly.svg"
        render_chart("line", {"x": months, "series": series}, p, title="Monthly network availability",
                     x_label="month", y_label="availability (%)")
        paths.append(p)
    tx = {n: r.throughput.per_month for n, r in results.items()}
    months = _month_axis(tx)
    if months:
        series = {n: [dict(v).get(m, 0.0) / 1e9 for m in months] for n, v in tx.items()}
        p = out / "throughput_monthly.svg"
        render_chart("line", {"x": months, "series": series}, p, title="Monthly transmitted data",
                     x_label="month", y_label="data (Gbit)")
        paths.append(p)
    names = list(results)
    p = out / "pdt.svg"
    render_chart("bar", {"labels": names, "values": [results[n].normalized_pdt or 0.0 for n in names]}, p,
                 title="Percentage of data transferred", x_label="configuration", y_label="PDT (%)")
    paths.append(p)
    pts = [(r.availability.tick_availability_pct, r.throughput.total_bits / 1e9, n) for n, r in results.items()]
    p = out / "availability_vs_data.svg"
    render_chart("scatter", {"points": pts}, p, title="Availability against transmitted data",
                 x_label="availability (%)", y_label="data (Gbit)")
    paths.append(p)
    if matrix is not None:
        p = out / "correlation.svg"
        render_chart("heatmap", {"labels": list(matrix.station_ids), "matrix": matrix.r}, p,
                     title="Cloud-cover correlation between stations")
        paths.append(p)
    return paths
