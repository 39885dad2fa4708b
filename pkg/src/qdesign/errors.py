"""Exception hierarchy shared by all toolkit modules."""


class QdesignError(Exception):
    """Base class for all toolkit errors."""


class DomainError(QdesignError, ValueError):
    """An input violates a documented precondition."""


class ConvergenceError(QdesignError, RuntimeError):
    """An iterative solver or quadrature failed to reach its tolerance.

    Attributes
    ----------
    residual : float or None
        Achieved residual / error estimate at the point of failure.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GeometryError(QdesignError, ValueError):
    """Loop geometry is invalid for the filament model (touching, open, ...)."""


class NoDecayError(QdesignError, RuntimeError):
    """A decay fit was requested on a trace with no resolvable decay."""


class ConfigError(QdesignError, ValueError):
    """Configuration file is malformed; message carries the offending key path."""


class DataFormatError(QdesignError, ValueError):
    """A data file (CSV, geometry) failed to parse; message lists bad lines."""
