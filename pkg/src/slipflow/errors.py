"""Exception types raised across the package."""


class SlipflowError(Exception):
    """Base class for all package errors."""


class DomainError(SlipflowError, ValueError):
    pass


class NoConvergenceError(SlipflowError, RuntimeError):
    pass


class PreconditionError(SlipflowError, ValueError):
    pass


class SingularityError(SlipflowError, ValueError):
    pass


class CenterSingularityError(SingularityError):
    """Raised when a construction needs phi(x) != 0 and phi(x) is at the disc centre."""


class SolverError(SlipflowError, RuntimeError):
    pass


class StateCorruptionError(SlipflowError, ValueError):
    pass


class PositivityError(SlipflowError, RuntimeError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StiffnessError(SlipflowError, RuntimeError):
    pass


class ConfigError(SlipflowError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
