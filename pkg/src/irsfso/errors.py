"""Exception hierarchy shared by all modules."""


class IrsFsoError(Exception):
    """Base class for library errors."""


class DomainError(IrsFsoError, ValueError):
    """Argument outside the domain of a function or model."""


class ConvergenceError(IrsFsoError, ArithmeticError):
    """An iterative evaluation did not reach its tolerance."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature hit its subdivision or node budget.

    ``estimate`` and ``error`` carry the best value reached so far.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InfeasibleFocusError(DomainError):
    """Requested focusing distance exceeds the reach of the IRS spot."""


class RegimeError(DomainError):
    """Parameters fall outside the validity regime of an approximation."""


class ConfigError(IrsFsoError):
    """Invalid scenario configuration. ``path`` names the offending field."""

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
