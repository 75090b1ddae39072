"""Exception hierarchy.

Data problems derive from :class:`DataError`, numerical breakdowns from
:class:`NumericalError`, and bad arguments from :class:`UsageError`. The CLI
maps the three families to exit codes 2, 3 and 1.
"""


class SubdimError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(SubdimError, ValueError):
    pass


class DataError(SubdimError, ValueError):
    pass


class NumericalError(SubdimError, ArithmeticError):
    pass


class InvalidInput(DataError):
    """Non-finite entries, wrong shapes or too few observations."""


class ParseError(DataError):
    """A CSV cell could not be read as a finite number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ColumnNotFound(DataError):
    pass


class InsufficientVariation(DataError):
    """The response has fewer distinct values than requested slices."""


class InvalidK(UsageError):
    pass


class InvalidSlices(UsageError):
    pass


class InvalidSpectrum(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class DegenerateObservation(NumericalError):
    """An observation coincides with the location estimate."""


class ConvergenceFailure(NumericalError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ReplicateFailure(NumericalError):
    """A bootstrap replicate failed on both its primary and its retry stream."""
