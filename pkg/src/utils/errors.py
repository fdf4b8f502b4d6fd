"""Exception hierarchy and the exit codes the command line maps them to."""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INCONCLUSIVE = 2
EXIT_VALIDATION = 3


class NilorbitError(Exception):
    """Base class for every error raised by this package."""

    exit_code = EXIT_FAILURE


class ValidationError(NilorbitError, ValueError):
    """Bad parameters or a malformed input document."""

    exit_code = EXIT_VALIDATION


class PreconditionError(ValidationError):
    """An operation was called outside its stated preconditions."""


class ArityError(ValidationError):
    """A point, direction or polynomial has the wrong number of variables."""


class InexactInputError(ValidationError):
    """An exact-only operation received real (non-rational) data."""


class SpecMismatchError(ValidationError):
    """Group elements or sequences built over different group specs were combined."""


class NotNormalizedError(ValidationError):
    """A polynomial sequence does not satisfy g(0) = id."""


class DensityError(NilorbitError):
    """A density hypothesis could not be certified from the supplied witnesses."""

    exit_code = EXIT_VALIDATION
