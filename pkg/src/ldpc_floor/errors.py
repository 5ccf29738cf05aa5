"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a mathematical function."""


class ValidationError(ValueError):
    """A structured input (topology, matrix, dimensions) is malformed."""


class BoundNotApplicableError(ValueError):
    """The LLRs are too small for a growth bound to hold."""


class ConvergenceError(RuntimeError):
    """A numerical search could not reach a conclusive answer."""


class AlistParseError(ValueError):
    """Malformed alist text. ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
