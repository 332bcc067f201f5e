"""Exception types shared across the solver."""


class LduoError(Exception):
    """Base class for all solver errors."""


class DomainError(LduoError, ValueError):
    """A parameter is outside its physical or contractual domain."""


class DegenerateTemperatureError(DomainError):
    """Temperature sits on (or numerically at) a cot pole of the
    Lorentz-Drude coefficient, beta*hbar*Lambda/2 = n*pi."""


class ConvergenceError(LduoError):
    """An iterative summation failed to converge; carries the partial sum."""

    def __init__(self, message, partial_sum=None):
        super().__init__(message)
        self.partial_sum = partial_sum


class ContractError(LduoError):
    """Inputs violate an operation's preconditions (shape/grid mismatch)."""


class ResourceError(LduoError):
    """A requested lattice or workspace exceeds the configured budget."""


class BlowUpError(LduoError):
    """NaN/Inf detected during time stepping; carries the step index."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class CheckpointMismatchError(LduoError):
    """Checkpoint refers to a different bath model or hierarchy."""
