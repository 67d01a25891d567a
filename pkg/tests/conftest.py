import math

import pytest

from ogsnet.orbit import GeodeticSite, make_tle

EPOCH = "2023-06-01T00:00:00Z"


@pytest.fixture
def tsx_tle():
    """Synthetic element set with TerraSAR-X-like mean motion and inclination."""
    return make_tle(31698, EPOCH, 97.44, 150.0, 0.0001, 90.0, 0.0, 15.19, name="TSX-LIKE")


@pytest.fixture
def polar_tle():
    return make_tle(90001, EPOCH, 90.0, 0.0, 0.0, 0.0, 0.0, 15.19)


@pytest.fixture
def equator_site():
    return GeodeticSite(0.0, 0.0, 0.0)


def tle_line(body: str) -> str:
    """Append a valid checksum digit to a 68-character body (independent of the library)."""
    s = sum(int(c) if c.isdigit() else (1 if c == "-" else 0) for c in body)
    return body + str(s % 10)


def wrap_deg(x):
    return (x + 180.0) % 360.0 - 180.0




_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def _report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


__all__ = ["tle_line", "wrap_deg", "math"]
