"""Exception hierarchy shared by every ruq module."""


class RuqError(Exception):
    """Base class for all library errors."""


class InputError(RuqError, ValueError):
    """Bad input data (files, distributions)."""


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(InputError):
    pass


class UndefinedConditionalError(RuqError, ValueError):
    pass


class ParameterError(RuqError, ValueError):
    """A parameter lies outside the domain of the requested quantity."""


class RangeError(ParameterError):
    pass


class UsageError(RuqError, ValueError):
    pass


class ResourceError(RuqError, MemoryError):
    """Enumeration would exceed the configured cap."""


class UnsupportedError(RuqError, TypeError):
    pass


class NoInverseError(RuqError, ZeroDivisionError):
    pass


class InvalidMaskError(ParameterError):
    pass
