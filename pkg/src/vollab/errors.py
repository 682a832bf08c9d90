"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage/config problems -> 1,
data problems -> 2, numeric problems -> 3.
"""


class VollabError(Exception):
    """Base class for all package errors."""


class UsageError(VollabError):
    """Bad command-line arguments or invalid run configuration."""


class DataError(VollabError):
    """Problems with input data (parsing, integrity, alignment)."""


class ParseError(DataError):
    """Malformed cell or row in an input file."""


class IntegrityError(DataError):
    """Structurally valid input violating an invariant (e.g. duplicate dates)."""


class AlignmentError(DataError):
    """Frames whose date ranges cannot be joined."""


class EmptyInputError(DataError):
    """Empty file or empty partition."""


class NumericError(VollabError):
    """Non-finite values or numerically impossible requests."""


class DomainError(NumericError):
    """Input outside a mathematical domain (e.g. log of a non-positive value)."""


class FitError(NumericError):
    """A model or scaler cannot be fitted on the given data."""


class DegenerateTestError(NumericError):
    """A statistical test with zero long-run variance: forecasts indistinguishable."""


class ReportError(VollabError):
    """Missing or partial record files when building a report."""
