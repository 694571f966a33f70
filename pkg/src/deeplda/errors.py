"""Exception hierarchy.

Errors are grouped so the command line can map them onto exit codes:
bad input data (2) versus numerical failure (3).
"""


class DeepLdaError(Exception):
    pass


class DataError(DeepLdaError, ValueError):
    pass


class NumericalError(DeepLdaError, ArithmeticError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NonFiniteLoss(NumericalError):
    pass


class DegenerateClass(DataError):
    pass


class DimensionTooSmall(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class StaleCache(DeepLdaError, RuntimeError):
    pass


class InsufficientClassSamples(DataError):
    pass


class BadMagic(DataError):
    pass


class CountMismatch(DataError):
    pass


class Truncated(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(DeepLdaError, ValueError):
    pass
