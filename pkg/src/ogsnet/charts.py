"""Self-contained SVG charts with deterministic output.

Bars are the only <rect> elements in a bar chart, and heatmap cells carry
class="cell", so element counts can be checked directly in tests.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import EmptySeries

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 160, 40, 80
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi == lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.floor(lo / step) * step
    ticks, t = [], first
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(ticks[-1] + step, 12))
    return ticks


def _label(v: float) -> str:
    if v != 0 and (abs(v) >= 1e5 or abs(v) < 1e-3):
        return f"{v:.1e}"
    return f"{v:g}"


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<text x="{WIDTH / 2:g}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        ]

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", **attrs):
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')

    def line(self, x1, y1, x2, y2, stroke="#000", width=1):
        self.add(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                 f'stroke="{stroke}" stroke-width="{width}"/>')

    def save(self, path):
        self.add("</svg>")
        Path(path).write_text("\n".join(self.parts) + "\n", encoding="utf-8")


class _Axes:
    """Plot area mapping with a numeric y axis and either numeric or categorical x."""

    def __init__(self, canvas: _Canvas, ylo, yhi, x_label, y_label, xlo=0.0, xhi=1.0):
        self.c = canvas
        self.x0, self.x1 = LEFT, WIDTH - RIGHT
        self.y0, self.y1 = HEIGHT - BOTTOM, TOP
        self.yt = _nice_ticks(ylo, yhi)
        self.ylo, self.yhi = self.yt[0], self.yt[-1]
        self.xlo, self.xhi = xlo, xhi if xhi > xlo else xlo + 1.0
        c = canvas
        c.line(self.x0, self.y0, self.x1, self.y0)
        c.line(self.x0, self.y0, self.x0, self.y1)
        for t in self.yt:
            y = self.y(t)
            c.line(self.x0 - 4, y, self.x0, y)
            c.text(self.x0 - 7, y + 4, _label(t), anchor="end")
        c.text((self.x0 + self.x1) / 2, HEIGHT - 20, x_label)
        cy = (self.y0 + self.y1) / 2
        c.text(18, cy, y_label, transform=f"rotate(-90 18 {_f(cy)})")

    def x(self, v):
        return self.x0 + (v - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def y(self, v):
        return self.y0 - (v - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def x_ticks_numeric(self):
        for t in _nice_ticks(self.xlo, self.xhi):
            if self.xlo <= t <= self.xhi:
                self.c.line(self.x(t), self.y0, self.x(t), self.y0 + 4)
                self.c.text(self.x(t), self.y0 + 17, _label(t))

    def x_ticks_categorical(self, labels):
        step = max(1, math.ceil(len(labels) / 12))
        for i, lab in enumerate(labels):
            if i % step == 0:
                x = self.x(i)
                self.c.line(x, self.y0, x, self.y0 + 4)
                self.c.text(x, self.y0 + 17, lab, transform=f"rotate(30 {_f(x)} {_f(self.y0 + 17)})",
                            anchor="start")


def _legend(c: _Canvas, names):
    for i, name in enumerate(names):
        y = TOP + 10 + 18 * i
        color = PALETTE[i % len(PALETTE)]
        c.line(WIDTH - RIGHT + 15, y, WIDTH - RIGHT + 35, y, stroke=color, width=3)
        c.text(WIDTH - RIGHT + 40, y + 4, name, anchor="start")


def line_chart(path, x_labels, series: dict, title="", x_label="", y_label=""):
    """One polyline per named series over categorical x positions (e.g. months)."""
    if not x_labels or not series or any(len(v) == 0 for v in series.values()):
        raise EmptySeries("line chart needs at least one point")
    values = np.array([v for vs in series.values() for v in vs if v is not None], float)
    if values.size == 0:
        raise EmptySeries("line chart needs at least one point")
    c = _Canvas(title)
    ax = _Axes(c, float(values.min()), float(values.max()), x_label, y_label, 0.0, max(len(x_labels) - 1, 1))
    ax.x_ticks_categorical(list(x_labels))
    for i, (name, ys) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        xy = [(ax.x(k), ax.y(v)) for k, v in enumerate(ys) if v is not None]
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in xy)
        c.add(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for x, y in xy:
            c.add(f'<circle class="marker" cx="{_f(x)}" cy="{_f(y)}" r="2.5" fill="{color}"/>')
    _legend(c, list(series))
    c.save(path)


def bar_chart(path, labels, values, title="", x_label="", y_label=""):
    if len(labels) == 0 or len(labels) != len(values):
        raise EmptySeries("bar chart needs matching, non-empty labels and values")
    vals = np.asarray(values, float)
    c = _Canvas(title)
    n = len(vals)
    ax = _Axes(c, min(0.0, float(vals.min())), max(0.0, float(vals.max())), x_label, y_label, -0.5, n - 0.5)
    width = 0.7 * (ax.x1 - ax.x0) / n
    zero = ax.y(0.0)
    for i, v in enumerate(vals):
        top = min(zero, ax.y(v))
        h = abs(ax.y(v) - zero)
        c.add(f'<rect x="{_f(ax.x(i) - width / 2)}" y="{_f(top)}" width="{_f(width)}" height="{_f(h)}" '
              f'fill="{PALETTE[0]}"><title>{escape(str(labels[i]))}: {v:.6g}</title></rect>')
        c.text(ax.x(i), top - 4, f"{v:.3g}", font_size="10")
    ax.x_ticks_categorical([str(x) for x in labels])
    c.save(path)


def scatter_chart(path, points, title="", x_label="", y_label=""):
    """points: sequence of (x, y, label)."""
    if not points:
        raise EmptySeries("scatter chart needs at least one point")
    xs = np.array([p[0] for p in points], float)
    ys = np.array([p[1] for p in points], float)
    c = _Canvas(title)
    pad_x = 0.05 * (xs.max() - xs.min() or 1.0)
    ax = _Axes(c, float(ys.min()), float(ys.max()), x_label, y_label,
               float(xs.min() - pad_x), float(xs.max() + pad_x))
    ax.x_ticks_numeric()
    for i, (x, y, lab) in enumerate(points):
        c.add(f'<circle class="point" cx="{_f(ax.x(x))}" cy="{_f(ax.y(y))}" r="5" '
              f'fill="{PALETTE[i % len(PALETTE)]}"/>')
        c.text(ax.x(x) + 8, ax.y(y) - 8, lab, anchor="start")
    c.save(path)


def _diverging(v: float) -> str:
    """Blue (-1) through white (0) to red (+1); grey for undefined values."""
    if not math.isfinite(v):
        return "#bbbbbb"
    v = max(-1.0, min(1.0, v))
    if v >= 0:
        r, g, b = 255, round(255 * (1 - v)), round(255 * (1 - v))
    else:
        r, g, b = round(255 * (1 + v)), round(255 * (1 + v)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_chart(path, labels, matrix, title="", scale=(-1.0, 1.0)):
    m = np.asarray(matrix, float)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape != (len(labels), len(labels)):
        raise EmptySeries("heatmap needs a non-empty square matrix matching its labels")
    n = m.shape[0]
    c = _Canvas(title)
    size = min(WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM) / n
    x0, y0 = LEFT + 40, TOP + 10
    for i in range(n):
        for j in range(n):
            x, y = x0 + j * size, y0 + i * size
            c.add(f'<path class="cell" d="M{_f(x)} {_f(y)}h{_f(size)}v{_f(size)}h{_f(-size)}z" '
                  f'fill="{_diverging(m[i, j])}" stroke="#fff"><title>{escape(labels[i])} / '
                  f'{escape(labels[j])}: {m[i, j]:.3f}</title></path>')
            if n <= 10 and math.isfinite(m[i, j]):
                c.text(x + size / 2, y + size / 2 + 4, f"{m[i, j]:.2f}", font_size="10")
        c.text(x0 - 5, y0 + i * size + size / 2 + 4, labels[i], anchor="end")
        cx = x0 + i * size + size / 2
        c.text(cx, y0 + n * size + 14, labels[i], anchor="start",
               transform=f"rotate(30 {_f(cx)} {_f(y0 + n * size + 14)})")
    lo, hi = scale
    gx, gy, gw, gh = WIDTH - RIGHT + 40, y0, 16, n * size
    c.add('<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">'
          f'<stop offset="0" stop-color="{_diverging(-1)}"/><stop offset="0.5" stop-color="{_diverging(0)}"/>'
          f'<stop offset="1" stop-color="{_diverging(1)}"/></linearGradient></defs>')
    c.add(f'<path class="legend" d="M{_f(gx)} {_f(gy)}h{gw}v{_f(gh)}h{-gw}z" fill="url(#scale)" stroke="#000"/>')
    c.text(gx + gw + 5, gy + 4, f"{hi:g}", anchor="start")
    c.text(gx + gw + 5, gy + gh / 2 + 4, f"{(lo + hi) / 2:g}", anchor="start")
    c.text(gx + gw + 5, gy + gh + 4, f"{lo:g}", anchor="start")
    c.text(gx + gw / 2, gy + gh + 24, "Pearson r")
    c.save(path)


def render_chart(kind: str, data: dict, path, **labels) -> None:
    """Dispatch on chart kind: line, bar, scatter or heatmap."""
    if kind == "line":
        line_chart(path, data["x"], data["series"], **labels)
    elif kind == "bar":
        bar_chart(path, data["labels"], data["values"], **labels)
    elif kind == "scatter":
        scatter_chart(path, data["points"], **labels)
    elif kind == "heatmap":
        heatmap_chart(path, data["labels"], data["matrix"], title=labels.get("title", ""))
    else:
        raise ValueError(f"unknown chart kind {kind!r}")
