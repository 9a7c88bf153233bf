class SlsError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(SlsError, ValueError):
    """Bad input: malformed files, invalid parameters, mismatched shapes."""


class NumericalError(SlsError, ArithmeticError):
    """A computation failed numerically (singular system, non-finite objective)."""
