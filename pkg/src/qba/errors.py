"""Exception types shared across the package."""


class QbaError(Exception):
    """Base class for all package errors."""


class EmptyInput(QbaError):
    """An operation received an empty collection where at least one item is required."""


class IndexOutOfRange(QbaError):
    """A 1-based position exceeds the length of the list it indexes."""


class InsufficientSupport(QbaError):
    """Too few correlated positions carry the requested value."""


class TooLarge(QbaError):
    """An exhaustive enumeration or dense state vector would exceed the configured bound."""


class ConfigError(QbaError):
    """A configuration violates its invariants."""


class CalibrationFailure(QbaError):
    """List-length calibration cannot meet the requested target."""
