"""Exception types shared across the package."""


class AnchorFimError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(AnchorFimError, ValueError):
    """An argument is outside the domain of an operation."""


class DegenerateGeometryError(AnchorFimError, ValueError):
    """Two points that must be distinct coincide."""


class ConfigError(AnchorFimError, ValueError):
    """A run configuration is malformed; the message names the field."""
