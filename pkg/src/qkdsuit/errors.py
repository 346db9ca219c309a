"""Exception hierarchy shared by every qkdsuit module."""


class QKDSuitError(Exception):
    """Base class for all library errors."""


class DimensionError(QKDSuitError, ValueError):
    """Operands live on incompatible Hilbert spaces, or a space is too large."""


class DomainError(QKDSuitError, ValueError):
    """An argument lies outside the domain of an operation."""


class InvalidStateError(QKDSuitError, ValueError):
    """A matrix or vector violates the invariants of a physical state."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DegenerateTargetError(QKDSuitError, ValueError):
    """Target density matrix has Tr(rho_T rho_T) == 0."""


class TruncationError(QKDSuitError, ValueError):
    """Fock-space truncation leaves too much Poisson tail mass."""

    def __init__(self, message, required_n_max):
        super().__init__(message)
        self.required_n_max = required_n_max


class UndefinedRatioError(QKDSuitError, ZeroDivisionError):
    """A leakage ratio has a vanishing denominator."""


class ConvergenceError(QKDSuitError, RuntimeError):
    """An iterative root search did not converge."""


class ConfigError(QKDSuitError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
