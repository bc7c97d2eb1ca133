"""Exception types shared across the package."""


class MdcfError(Exception):
    """Base class for all package errors."""


class ParseError(MdcfError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DataError(MdcfError):
    """Dataset violates an operation's precondition."""


class ConfigError(MdcfError):
    """Invalid training configuration."""


class NumericError(MdcfError):
    """A numeric quantity became non-finite; the message names the term."""


class LinkDomainError(MdcfError):
    """A rating lies outside the link function's domain."""


class ModelFormatError(MdcfError):
    """Model file is missing, truncated, or has an unknown version."""
