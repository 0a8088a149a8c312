"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes do not conform."""


class DomainError(ValueError):
    """An argument lies outside the operation's domain."""


class ContractError(RuntimeError):
    """A call violated an API precondition (e.g. non-scalar loss)."""


class ParseError(ValueError):
    """A corpus or config file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DivergenceError(RuntimeError):
    """Training produced a non-finite or exploding loss."""

    def __init__(self, message, breakdown=None):
        super().__init__(message)
        self.breakdown = breakdown
