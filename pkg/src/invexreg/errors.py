"""Exception types raised across the package."""


class InvexRegError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(InvexRegError, ValueError):
    pass


class NonFinite(InvexRegError, FloatingPointError):
    """A model or optimizer produced NaN/Inf (or diverged)."""


class NotSPD(InvexRegError, ValueError):
    pass


class NotFullRowRank(InvexRegError, ValueError):
    pass


class NoConvergence(InvexRegError, RuntimeError):
    pass


class TraceIncomplete(InvexRegError, ValueError):
    """The trace lacks the data an operation needs (e.g. stored iterates)."""


class InvalidTrace(InvexRegError, ValueError):
    """The trace was not produced under the preconditions a check assumes."""


class ConfigError(InvexRegError, ValueError):
    """Malformed experiment configuration."""
