"""Exception hierarchy shared by every module.

The CLI maps :class:`ValidationError` to exit code 1 and every other
:class:`GtennError` to exit code 2.
"""


class GtennError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GtennError, ValueError):
    """Bad user input: configuration values, file contents, argument ranges."""


class ShapeError(ValidationError):
    """Operand shapes are incompatible."""


class FormatError(ValidationError):
    """A data file does not follow the expected text format."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class NumericError(GtennError, ArithmeticError):
    """A computation produced a non-finite value."""


class GenerationError(GtennError, RuntimeError):
    """The benchmark generator could not realize the requested parameters."""
