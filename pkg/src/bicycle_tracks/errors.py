"""Exception types raised by the engine."""


class TrackError(Exception):
    """Base class for all engine errors."""


class CurveSpecError(TrackError, ValueError):
    """A curve specification violates its invariants."""


class UnderResolvedError(TrackError):
    """Sampling or step size too coarse for a reliable answer."""


class UnsupportedFrontError(TrackError, ValueError):
    """The curve lacks a property the operation needs (closedness, convexity, ...)."""


class MonodromyError(TrackError):
    """The monodromy type does not allow the requested operation."""


class LinkageError(TrackError):
    """A linkage left the admissible region or its speeds overflowed."""


class NumericalFailure(TrackError):
    """Root finding or iteration did not converge."""
