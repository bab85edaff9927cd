"""Exception types shared across the package."""


class TldaError(Exception):
    """Base class for all package errors."""


class DimensionError(TldaError, ValueError):
    """Operands have non-conforming shapes or an argument is out of range."""


class SingularScatterError(TldaError, ArithmeticError):
    """A within-class scatter (or its projection) is numerically singular."""


class NumericalConsistencyError(TldaError, ArithmeticError):
    """A result that should be real carries a non-negligible imaginary part."""


class TensorFormatError(TldaError, ValueError):
    """A TNS3 / TLDA / labels file is malformed.

    Parameters
    ----------
    message : str
        Human readable description.
    offset : int, optional
        Byte offset (or line number for CSV files) where parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
