"""Diffusion of binary outcomes on networks: BSAR and SAOM estimation."""


class NetdiffError(Exception):
    """Base class for every error raised by netdiff."""


class InvalidArgumentError(NetdiffError, ValueError):
    """Raised when an operation is called outside its preconditions."""


class NumericFailureError(NetdiffError):
    """Raised when a linear-algebra step fails (singular system, eigensolver)."""


class ParseError(NetdiffError):
    """Raised for a malformed line in an input file."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DataValidationError(NetdiffError):
    """Raised when well-formed input violates a data invariant."""


class ConfigError(NetdiffError):
    """Raised when the run configuration cannot drive the requested command."""
