"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class for all simulator errors."""


class ShapeMismatchError(SimError, ValueError):
    """Raised when tensors or parameter lists are not shape-compatible."""


class NumericError(SimError, ArithmeticError):
    """Raised on NaN/Inf in a numeric computation; message carries context."""


class StaleCacheError(SimError, RuntimeError):
    """Raised when a backward pass receives a cache from different parameters."""


class ConfigError(SimError, ValueError):
    """Raised on invalid or unknown experiment configuration; names the key."""


class CsvParseError(SimError, ValueError):
    """Raised on a malformed CSV row; message names the line number."""


class CsvSchemaError(SimError, ValueError):
    """Raised when a CSV file violates the expected schema."""


class PartitionError(SimError, RuntimeError):
    """Raised when a partition cannot satisfy its guarantees."""


class SplitError(SimError, RuntimeError):
    """Raised when a train/test split is impossible (too few samples)."""
