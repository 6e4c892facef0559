"""Exception types shared across the package."""


class FedwoaError(Exception):
    """Base class for all package errors."""


class ValidationError(FedwoaError):
    """Bad input data: malformed rows, negative loads, shape mismatches."""


class ConfigError(FedwoaError):
    """Invalid configuration. Carries the dotted field path when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
