"""Exception hierarchy shared by every module."""


class RvsmError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateVector(RvsmError, ValueError):
    """A vector norm fell below the admissible floor (the angle is undefined)."""


class ShapeMismatch(RvsmError, ValueError):
    """Vector lengths are incompatible."""


class NonFinite(RvsmError, FloatingPointError):
    """A computation produced NaN or Inf.

    ``iteration`` is set when the failure happened inside an optimizer loop.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class InvalidRadius(RvsmError, ValueError):
    pass


class InvalidBeta(RvsmError, ValueError):
    pass


class InvalidRange(RvsmError, ValueError):
    pass


class InvalidConfig(RvsmError, ValueError):
    """Configuration rejected; ``line`` points into the source file when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NotConverged(RvsmError):
    """A run hit its iteration budget before the step-norm tolerance."""


class AnnulusViolation(RvsmError):
    """Iterate norms collapse to zero or escape every bounded band."""
