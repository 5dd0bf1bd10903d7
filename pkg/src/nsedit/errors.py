"""Exception hierarchy shared by all nsedit modules."""


class NSEditError(Exception):
    """Base class for every error raised by nsedit."""


class DimensionError(NSEditError, ValueError):
    """Operands have incompatible shapes or contain non-finite entries."""


class NumericalError(NSEditError, ArithmeticError):
    """A factorization or decomposition failed to converge."""

    def __init__(self, message, shape=None):
        if shape is not None:
            message = f"{message} (matrix shape {shape[0]}x{shape[1]})"
        super().__init__(message)
        self.shape = shape


class NotSPDError(NumericalError):
    """Cholesky met a non-positive pivot."""

    def __init__(self, pivot, shape=None):
        super().__init__(f"matrix is not positive definite: pivot {pivot} is non-positive", shape)
        self.pivot = pivot


class ConditioningError(NumericalError):
    """A dense linear system is singular to working precision."""


class GapDegenerateError(NumericalError):
    """Truncation happened at a zero spectral gap, so the error bound is undefined."""


class ConfigError(NSEditError, ValueError):
    """An experiment or solver configuration failed validation."""


class MatrixFormatError(NSEditError, ValueError):
    """A matrix file is malformed."""
