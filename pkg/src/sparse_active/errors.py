"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """An argument lies outside the range an operation accepts."""


class DegenerateInputError(ValueError):
    """A vector has no direction (zero norm) where one is required."""


class SamplingStarvationError(RuntimeError):
    """Rejection sampling exceeded its attempt cap."""

    def __init__(self, message, width=None, attempts=None):
        super().__init__(message)
        self.width = width
        self.attempts = attempts


class ProjectionConvergenceWarning(UserWarning):
    """Alternating projection stopped at its iteration cap.

    The last iterate is attached so callers can keep going with it.
    """

    def __init__(self, message, iterate=None, iterations=None):
        super().__init__(message)
        self.iterate = iterate
        self.iterations = iterations
