"""Exception types shared by all modules."""


class PamtreeError(Exception):
    """Base class for package errors."""


class InputError(PamtreeError, ValueError):
    """Malformed input, e.g. an invalid vertex id."""


class DomainError(PamtreeError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class ResourceError(PamtreeError, RuntimeError):
    """A configured size cap (vertices, animals, dense matrix size) was exceeded."""


class ConvergenceError(PamtreeError, RuntimeError):
    """An iterative method stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UnsupportedError(PamtreeError, NotImplementedError):
    """The requested quantity is not available for this input."""
