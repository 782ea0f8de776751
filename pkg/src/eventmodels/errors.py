"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class EventModelError(Exception):
    exit_code = 1


class InputError(EventModelError, ValueError):
    """Bad label, malformed file, or a precondition violated by the caller."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConsistencyError(InputError):
    """A recorded life contradicts the world it claims to come from."""


class OracleError(InputError):
    pass


class CapacityError(EventModelError):
    exit_code = 3

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MissingOracleError(EventModelError):
    exit_code = 4


class GenerationError(EventModelError):
    exit_code = 5
