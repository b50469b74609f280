"""Exception types shared across the package."""


class ComdfError(Exception):
    """Base class for all package errors."""


class ConvergenceError(ComdfError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The last observed residual (or increment) is kept on ``residual`` so
    callers can judge how far off the iterate was.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DesignError(ComdfError, ValueError):
    """A design precondition does not hold (connectivity, stability, norms)."""


class ScenarioError(ComdfError, ValueError):
    """Malformed or inconsistent scenario input."""
