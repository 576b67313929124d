"""Exception types shared across the solver."""


class SpecpartError(Exception):
    """Base class for solver failures."""


class DegenerateStateError(SpecpartError):
    """A group of fields became (numerically) linearly dependent.

    Raised when a Gram matrix is singular or indefinite; the caller should
    re-orthonormalize or restart from a different initial state.
    """


class ConvergenceError(SpecpartError):
    """An iterative solve did not reach the requested tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class StageFailureError(SpecpartError):
    """A continuation stage aborted; carries the partial run trace."""

    def __init__(self, message, trace=None, stage=None):
        super().__init__(message)
        self.trace = trace
        self.stage = stage
