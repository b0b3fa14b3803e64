"""Exception hierarchy shared by every module."""


class QKError(Exception):
    """Base class for all errors raised by qkflag."""


class DomainError(QKError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ResourceError(QKError):
    """A configured size or time limit was exceeded."""


class RankError(QKError):
    """A quotient ring has the wrong (or infinite) rank."""

    def __init__(self, message, observed=None, expected=None):
        super().__init__(message)
        self.observed = observed
        self.expected = expected


class PresentationMismatch(QKError):
    """An identity that must hold in the ring produced a nonzero residual."""


class DegeneracyError(QKError, ValueError):
    """Equivariant parameters are not distinct / nonzero."""


class PathError(QKError):
    """Homotopy path tracking failed."""

    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t


class StructuralError(QKError):
    """Two objects that must have matching structure do not."""


class InternalError(QKError):
    """An internal invariant was violated."""
