"""Exception taxonomy shared across the package.

``exit_code`` drives the CLI contract: 2 for configuration problems, 3 for
bad market data, 4 for numerical failures.
"""


class RvdlmError(Exception):
    exit_code = 1


class ConfigError(RvdlmError):
    exit_code = 2


class DataError(RvdlmError):
    """Bad or inconsistent market data; carries the offending date if known."""

    exit_code = 3

    def __init__(self, message, date=None):
        if date is not None:
            message = f"{message} [date={date}]"
        super().__init__(message)
        self.date = date


class NumericalError(RvdlmError):
    exit_code = 4


class DomainError(NumericalError):
    """Argument outside the domain of a math routine."""
