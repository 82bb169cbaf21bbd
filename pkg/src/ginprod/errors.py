"""Exception types shared across the package."""


class GinprodError(Exception):
    """Base class for all package errors."""


class DomainError(GinprodError, ValueError):
    """Input outside the mathematical domain of an operation (poles, x <= 0, ...)."""


class ShapeError(GinprodError, ValueError):
    """Matrix dimensions incompatible with the requested operation."""


class ConfigurationError(GinprodError, ValueError):
    """Inconsistent configuration, e.g. intersecting integration contours."""


class NumericalError(GinprodError, RuntimeError):
    """A numerical procedure failed to converge or reported an inconsistency.

    Carries an optional ``diagnostics`` payload (dict) for post-mortem
    inspection: residual tables, per-panel errors, bracket scans.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
