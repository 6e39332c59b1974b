"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """Requested work exceeds a hard size limit (enumeration, encoding width)."""


class NumericFailure(ArithmeticError):
    """Solver state became non-finite."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite state at iteration {iteration}")


class UnsupportedOperation(ValueError):
    """Operation is not defined for the given configuration."""


class DataInconsistencyError(ValueError):
    """Inputs contradict each other (e.g. a best-known value that is not best)."""


class UndefinedGapError(ZeroDivisionError):
    """Relative optimality gap requested against a zero reference."""


class ParseError(ValueError):
    """Malformed problem or report file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
