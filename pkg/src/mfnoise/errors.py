"""Error types shared across the package."""


class InvalidArgumentError(ValueError):
    """Bad shapes, out-of-range parameters, or malformed config input."""


class UnsupportedRankError(InvalidArgumentError):
    """Operation defined only for rank-1 factor pairs."""


class DegenerateNoiseError(InvalidArgumentError):
    """Noise too large for the requested landscape object to exist."""


class UndefinedRatioError(InvalidArgumentError):
    """A norm ratio whose denominator vanishes."""


class NumericalFailureError(RuntimeError):
    """Non-finite values during iteration, or an iterative solver stalled.

    ``iteration`` carries the failing step index when the failure happened
    inside an optimization run, else None.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
