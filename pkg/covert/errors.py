"""Exception hierarchy shared by the numerical modules and the CLI."""
from typing import Optional


class CovertError(Exception):
    """Base class for all errors raised by the covert package."""


class DomainError(CovertError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(DomainError):
    """A user-supplied parameter (flag, config file, environment) is invalid."""


class ConvergenceError(CovertError, RuntimeError):
    """An iterative solver ran out of iterations before meeting its tolerance."""

    def __init__(self, message: str, iterations: int = 0, residual: Optional[float] = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


def require(condition: bool, message: str, error: type = DomainError):
    """Raise ``error(message)`` unless ``condition`` holds."""
    if not condition:
        raise error(message)
