"""Exception hierarchy shared by every module.

Each class maps onto one CLI exit status, so callers can triage failures
without parsing messages.
"""


class LQChainError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ValidationError(LQChainError, ValueError):
    """Invalid parameters or configuration."""

    exit_code = 2


class DomainError(LQChainError, ValueError):
    """Argument outside the domain where a formula is defined."""

    exit_code = 3


class IntegrationError(LQChainError, ArithmeticError):
    """ODE integration failed; ``time`` is where it happened (or None)."""

    exit_code = 3

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConvergenceError(LQChainError, ArithmeticError):
    """A series, quadrature or refinement loop missed its tolerance."""

    exit_code = 3

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class TruncationError(LQChainError, ValueError):
    """A stored truncation does not cover what the caller asked for."""

    exit_code = 3


class ResourceError(LQChainError, MemoryError):
    """The requested problem exceeds the size limits of a routine."""

    exit_code = 3


class SimulationError(LQChainError, RuntimeError):
    """Non-finite state during simulation."""

    exit_code = 4

    def __init__(self, message, path=None, time=None):
        super().__init__(message)
        self.path = path
        self.time = time
