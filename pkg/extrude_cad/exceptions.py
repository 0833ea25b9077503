"""Exception hierarchy shared by every kernel app."""
from typing import Optional


class ExtrudeCadError(Exception):
    """Base class for kernel errors"""


class InvalidParameterError(ExtrudeCadError, ValueError):
    """A parameter violates its documented invariant"""


class DomainError(ExtrudeCadError, ValueError):
    """An argument lies outside the domain of an operation"""


class ConfigError(ExtrudeCadError, ValueError):
    """A configuration file is malformed or names unknown keys"""


class FormatParseError(ExtrudeCadError, ValueError):
    """A data file could not be parsed"""

    def __init__(self, message: str, path: Optional[str] = None, line_number: Optional[int] = None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        super().__init__(f"{location}{message}")


class NonFiniteLossError(ExtrudeCadError, ArithmeticError):
    """Fitting produced a NaN or infinite loss"""

    def __init__(self, iteration: int, last_row: Optional[dict] = None):
        self.iteration = iteration
        self.last_row = last_row
        detail = f" (last finite losses: {last_row})" if last_row else ""
        super().__init__(f"Non-finite loss at iteration {iteration}{detail}")
