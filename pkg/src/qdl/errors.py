"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid arguments: wrong sizes, bad indices, non-unitary matrices."""


class SizeLimitError(InputError):
    """A dense construction was refused because the system is too large."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateGapError(ArithmeticError):
    """A gap ratio was requested with a vanishing denominator."""


class CacheFormatError(InputError):
    """A cached dataset file is truncated, corrupted or of an unknown version."""
