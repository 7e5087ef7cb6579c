"""Exception types shared across the package.

Each class carries the CLI exit code of its category: 2 for data errors,
3 for numeric failures.  Exit code 1 is reserved for command-line usage
problems and never attached to a library exception.
"""


class WarpsimError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ParseError(WarpsimError):
    """Malformed dataset record; carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimMismatchError(WarpsimError):
    """Operands disagree on the feature dimension or vector length."""


class ZeroTimeStepError(WarpsimError):
    """A time moment has (near-)zero L2 norm and cannot be normalized."""


class EmptyDatasetError(WarpsimError):
    """An operation that needs at least one series received none."""


class EmptyInputError(WarpsimError):
    """An operation that needs at least one element received none."""


class LengthMismatchError(WarpsimError):
    """Two sequences that must have equal length do not."""


class EmptyLandmarksError(WarpsimError):
    """A similarity model needs at least one landmark."""


class CountOutOfRangeError(WarpsimError):
    """Requested selection count is outside [1, available]."""


class SingleClassError(WarpsimError):
    """A classification protocol needs at least two classes."""


class TooFewRowsError(WarpsimError):
    """Not enough rows for the requested decomposition."""


class DegenerateFoldError(WarpsimError):
    """No validation split can contain every class (a class is too small)."""


class NonFiniteError(WarpsimError):
    """NaN or infinity where a finite value is required."""

    exit_code = 3


class NonPositiveInputError(WarpsimError):
    """A strictly positive quantity was zero or negative."""

    exit_code = 3


class TooLargeError(WarpsimError):
    """Instance exceeds the size guard of an exhaustive procedure."""

    exit_code = 3
