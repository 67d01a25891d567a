"""UTC time helpers.

Internally every timestamp is a POSIX float (seconds since 1970-01-01 UTC,
leap seconds ignored) so that whole windows can be handled as numpy arrays.
"""
from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

DAY = 86400.0


def to_seconds(t) -> float:
    """Convert a datetime (naive means UTC), ISO string or number to POSIX seconds."""
    if isinstance(t, (int, float, np.floating, np.integer)):
        return float(t)
    if isinstance(t, str):
        t = parse_iso(t)
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return t.timestamp()


def from_seconds(s: float) -> datetime:
    return datetime.fromtimestamp(float(s), tz=timezone.utc)


def parse_iso(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_iso(s: float) -> str:
    """ISO-8601 with millisecond resolution and a trailing Z."""
    ms = int(round(float(s) * 1000.0))
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{ms % 1000:03d}Z"


def month_keys(seconds) -> np.ndarray:
    """Vectorised 'YYYY-MM' labels for POSIX seconds."""
    ms = np.floor(np.asarray(seconds, dtype=float) * 1000.0).astype("int64")
    months = ms.astype("datetime64[ms]").astype("datetime64[M]")
    return np.datetime_as_string(months, unit="M")


def month_bounds(key: str) -> tuple[float, float]:
    """Start and end (exclusive) of the calendar month 'YYYY-MM' in POSIX seconds."""
    start = np.datetime64(key, "M")
    end = start + np.timedelta64(1, "M")
    to_s = lambda m: m.astype("datetime64[s]").astype("int64").item()
    return float(to_s(start)), float(to_s(end))


def julian_date(seconds):
    return np.asarray(seconds, dtype=float) / DAY + 2440587.5
