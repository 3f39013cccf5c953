"""Exception types shared across the package."""


class MetricNetError(Exception):
    """Base class for all metricnet errors."""


class FormatError(MetricNetError):
    """Byte stream or file does not match the expected format."""


class TruncationError(MetricNetError):
    """Declared payload size exceeds the bytes actually present."""


class RangeError(MetricNetError):
    """A count or index argument is outside its valid range."""


class SelectionError(MetricNetError):
    """Prototype selection cannot satisfy the request."""


class EmptyImageError(MetricNetError):
    """Operation requires at least one ink pixel."""


class DimensionError(MetricNetError):
    """Operands have incompatible shapes."""


class ModeError(MetricNetError):
    """Network is in the wrong activation mode for this operation."""


class ConfigError(MetricNetError):
    """Training configuration is invalid."""
