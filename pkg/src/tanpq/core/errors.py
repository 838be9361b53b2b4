"""
Exception hierarchy

Every error raised by the laboratory derives from TanpqError and from the
closest builtin, so callers may catch either.
"""


class TanpqError(Exception):
    """Base class for all tanpq errors."""


class PoleHitError(TanpqError, ArithmeticError):
    """An evaluation landed within pole tolerance of a pole of tan."""

    def __init__(self, w, message=None):
        self.w = w
        super().__init__(message or f"argument {w!r} is at a pole of tan")


class MagnitudeOverflowError(TanpqError, OverflowError):
    """|z| exceeded the overflow threshold before evaluation."""


class DegenerateInputError(TanpqError, ValueError):
    """Input lies on a degenerate locus (z = 0, tan(z^q) = 0, ...)."""


class PreconditionError(TanpqError, ValueError):
    """An operation was called outside its documented domain."""


class SingularMultiplierError(TanpqError, ArithmeticError):
    """sin(2 z^q) vanished on a cycle point."""


class RefinementError(TanpqError, RuntimeError):
    """Newton refinement of a periodic cycle failed to converge."""


class NoConvergenceError(TanpqError, RuntimeError):
    """Newton search for a virtual center diverged."""


class WrongOrderError(TanpqError, ValueError):
    """A Newton search collapsed onto a center of lower order."""


class PredicateError(TanpqError, ValueError):
    """Flood fill seed cell does not satisfy the predicate."""


class InconclusiveError(TanpqError, RuntimeError):
    """A numerical check could not reach a verdict (window or radius unsuitable)."""


class UnknownSuiteError(TanpqError, ValueError):
    """Suite name not registered."""

    def __init__(self, name, valid):
        self.name = name
        self.valid = list(valid)
        super().__init__(f"unknown suite {name!r}; valid suites: {', '.join(self.valid)}")
