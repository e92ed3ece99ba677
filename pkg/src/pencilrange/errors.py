"""Exception types shared across the package.

The split matters to the command line front end, which maps argument and
file-schema problems to exit code 2, numerical failures to exit code 3 and
non-converged iterations to exit code 4.
"""


class PencilRangeError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(PencilRangeError, ValueError):
    """A JSON document does not match the signal or class-file schema."""

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class NumericError(PencilRangeError, ArithmeticError):
    """A quantity required by the algorithm is undefined or non-finite."""
