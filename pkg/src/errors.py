"""Exception hierarchy for the simulator.

Blow-up and under-resolution are verdicts, not exceptions; the classes here
cover genuine failures of a computation or of its inputs.
"""


class WhithamError(Exception):
    """Base class for all simulator errors."""


class DomainError(WhithamError, ValueError):
    """An argument lies outside the range where an operation is defined."""


class NumericOverflowError(WhithamError, ArithmeticError):
    """A spectral computation produced non-finite coefficients."""

    def __init__(self, message: str, mode: int | None = None):
        super().__init__(message)
        self.mode = mode


class IllConditionedError(WhithamError, ArithmeticError):
    """Spectral differentiation would amplify round-off beyond use."""

    def __init__(self, message: str, amplification: float):
        super().__init__(message)
        self.amplification = amplification


class QuadratureError(WhithamError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class CalibrationError(WhithamError):
    """The kernel constant could not be fitted consistently across modes."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ResolutionError(WhithamError, ValueError):
    """The requested data cannot be represented on the given grid."""
