"""Exception types shared across the package."""


class RpError(Exception):
    """Base class for all package-specific errors."""


class DataError(RpError):
    """Malformed or inconsistent input data (bad ratings line, empty file, ...)."""


class FormatError(RpError):
    """A binary artifact could not be decoded."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """File carries an unsupported container version."""


class TruncatedPayloadError(FormatError):
    """File ends before the declared payload is complete."""


class BudgetExceededError(RpError):
    """A requested artifact would exceed the configured size budget."""
