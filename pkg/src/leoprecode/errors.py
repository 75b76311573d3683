"""Failure modes shared across the simulator."""


class NoVisibleSatellite(RuntimeError):
    """No satellite clears the elevation mask at the requested instant."""


class DegenerateGeometry(ValueError):
    """Geometry puts a formula outside its valid domain (e.g. zenith cos -> 0)."""


class DimensionMismatch(ValueError):
    """Matrix/vector dimensions disagree."""


class LengthMismatch(ValueError):
    """A flat vector has the wrong length for the requested reshape."""


class ShapeMismatch(ValueError):
    """Network parameter or input shapes disagree."""


class RankDeficient(ValueError):
    """Channel matrix is (numerically) rank deficient."""


class ZeroColumn(ValueError):
    """Channel column is exactly zero where a nonzero column is required."""


class EmptyBatch(ValueError):
    """A minibatch operation received no samples."""


class NotInitialized(RuntimeError):
    """Environment stepped before reset()."""


class NumericalFailure(ArithmeticError):
    """A numerical evaluation produced non-finite intermediates."""


class ConfigError(ValueError):
    """Run-config file could not be parsed; message names the offending key."""
