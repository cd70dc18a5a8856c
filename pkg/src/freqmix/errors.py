"""Exception hierarchy shared by the library and the command line."""


class FreqMixError(Exception):
    """Base class for all errors raised by freqmix."""

    exit_code = 1


class InvalidParameterError(FreqMixError, ValueError):
    """A dimension, shape or scalar argument is outside its valid range."""

    exit_code = 2


class SymmetryViolationError(FreqMixError):
    """A spectrum is not Hermitian, so its inverse transform is not real."""


class DivergenceError(FreqMixError, ArithmeticError):
    """The optimizer produced a non-finite loss."""

    exit_code = 4

    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step


class ParseError(FreqMixError):
    """A structured text file could not be parsed."""

    exit_code = 2

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{message} [field: {field}]"
        super().__init__(message)
        self.field = field


class SchemaError(FreqMixError):
    """A file parsed but its contents contradict its header or its consumer."""

    exit_code = 2


class ManifestError(FreqMixError):
    """A run or corpus manifest failed validation."""

    exit_code = 2


class DecodeError(FreqMixError, OSError):
    """An image file is corrupt or uses an unsupported format."""

    exit_code = 3

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset
