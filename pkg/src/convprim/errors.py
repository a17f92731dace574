"""Exception hierarchy shared by every module of the library."""


class ConvPrimError(Exception):
    """Base class for library errors."""


class DimensionError(ConvPrimError, ValueError):
    """Shapes or buffer lengths do not agree."""


class BoundsError(ConvPrimError, IndexError):
    """Index outside a tensor."""


class DomainError(ConvPrimError, ValueError):
    """Input outside the mathematical domain (empty, non-finite)."""


class ConfigurationError(ConvPrimError, ValueError):
    """Invalid layer configuration or quantization exponents."""


class ContractError(ConvPrimError, ValueError):
    """A kernel helper was called outside its contract."""


class UnsupportedPathError(ConfigurationError):
    """No implementation exists for the requested (primitive, path) pair."""


class InsufficientDataError(ConvPrimError, ValueError):
    """Not enough points for a regression."""
