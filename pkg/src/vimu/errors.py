"""Exception types shared across the package."""


class VimuError(Exception):
    """Base class for all package errors."""


class ConfigurationError(VimuError):
    """A config, file header, or network layout is structurally invalid."""


class ValidationError(VimuError):
    """Input data violates a documented precondition or invariant."""


class EmptyDataError(VimuError):
    """A pipeline stage was left with no data to work on."""


class DivergenceError(VimuError):
    """Training produced a non-finite loss."""
