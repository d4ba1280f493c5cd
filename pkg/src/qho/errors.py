"""Exception hierarchy shared by the solver, evaluators and the CLI."""


class QHOError(Exception):
    """Base class for all library errors."""


class DomainError(QHOError, ValueError):
    """A time or grid value lies outside the configured domain."""


class ConfigError(QHOError, ValueError):
    """Invalid preset, parameters or run configuration."""


class NumericalError(QHOError, ArithmeticError):
    """Base class for failures of the numerical machinery."""


class IntegrationError(NumericalError):
    """The adaptive ODE integrator failed (e.g. step-size underflow)."""


class CausticError(NumericalError):
    """Evaluation requested at a zero of the standard solution mu0."""

    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"caustic at t={self.t:.12g} (mu0(t) = 0)")


class DegenerateFocusError(NumericalError):
    """The Riccati superposition denominator alpha(0) + gamma0(t) vanishes."""

    def __init__(self, t):
        self.t = float(t)
        super().__init__(f"degenerate focus at t={self.t:.12g}: alpha(0) + gamma0(t) = 0")
