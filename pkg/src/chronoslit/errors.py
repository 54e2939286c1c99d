"""Exception types shared across the package."""


class ChronoslitError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ChronoslitError, ValueError):
    """Invalid parameters, grids or configuration files."""


class GridMismatchError(ChronoslitError, ValueError):
    """Two objects that must live on the same grid do not."""


class InsufficientDataError(ChronoslitError, ValueError):
    """Too few counts (or a flat pattern) to form the requested estimate."""
