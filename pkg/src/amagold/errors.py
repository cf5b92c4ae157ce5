"""Exception types shared across the package."""


class AmagoldError(Exception):
    """Base class for all package errors."""


class ContractError(AmagoldError):
    """An argument violates a documented precondition (shape, length, range)."""


class DomainError(AmagoldError):
    """A state or input contains non-finite or out-of-support values."""


class ConfigError(AmagoldError):
    """A configuration value is invalid or inconsistent with the model."""


class NumericalError(AmagoldError):
    """A computation produced non-finite values where none are tolerated."""


class ParseError(AmagoldError):
    """A data file could not be parsed; message carries the 1-based line number."""


class TuningFailure(AmagoldError):
    """Step-size tuning hit the lower bound with zero acceptance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class UsageError(AmagoldError):
    """Bad command-line or experiment configuration; message lists every problem."""
