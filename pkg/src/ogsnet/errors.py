"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for data and configuration errors (CLI exit status 2)."""


class InvariantViolation(SimulationError):
    """An internal consistency check failed (CLI exit status 3)."""


# orbit
class TLEError(SimulationError, ValueError):
    def __init__(self, message, line=None, columns=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if columns is not None:
                where += f", columns {columns[0]}-{columns[1]}"
            where = f" ({where})"
        super().__init__(message + where)
        self.line = line
        self.columns = columns


class ChecksumMismatch(TLEError):
    pass


class FormatError(TLEError):
    pass


class EccentricityDomain(SimulationError, ValueError):
    pass


# passes
class WindowTooLarge(SimulationError, ValueError):
    pass


class InvalidThreshold(SimulationError, ValueError):
    pass


# weather
class SchemaError(SimulationError, ValueError):
    pass


class GridValueError(SimulationError, ValueError):
    pass


class TimeOrderError(SimulationError, ValueError):
    pass


class OutOfCoverage(SimulationError, ValueError):
    pass


class OutOfSpan(SimulationError, ValueError):
    pass


# link budget
class DomainError(SimulationError, ValueError):
    pass


# analysis
class SpecMismatch(SimulationError, ValueError):
    pass


class NoOverlap(SimulationError, ValueError):
    pass


class DegenerateSeries(SimulationError, ValueError):
    pass


# scenario
class ConfigError(SimulationError, ValueError):
    def __init__(self, message, key=None, line=None, path=None):
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        if key is not None:
            parts.append(key)
        prefix = ":".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.message = message
        self.key = key
        self.line = line
        self.path = path


class MissingKey(ConfigError):
    pass


class UnitError(ConfigError):
    pass


class SpanMismatch(SimulationError, ValueError):
    pass


# charts
class EmptySeries(SimulationError, ValueError):
    pass
