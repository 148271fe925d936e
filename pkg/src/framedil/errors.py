"""Exception hierarchy shared by all modules."""


class FramedilError(Exception):
    """Base class for every error raised by this package."""


class MalformedInputError(FramedilError, ValueError):
    """Inconsistent shapes, non-finite entries, bad masks or bad parameters."""


class PreconditionError(FramedilError):
    """A mathematical precondition of an operation does not hold."""


class NotAFrameError(PreconditionError):
    """The family does not span, so the frame operator is singular."""


class NotADualPairError(PreconditionError):
    """The two families do not reconstruct the identity."""


class DegenerateFramingError(PreconditionError):
    """A framing pair has exactly one zero member and cannot be balanced."""


class MalformedAlgebraError(PreconditionError):
    """The basis is dependent, not closed under products, or lacks the identity."""


class ResourceError(FramedilError):
    """Exhaustive enumeration would exceed the hard size caps."""


class ConsistencyError(FramedilError):
    """An internal construction failed its own post-verification."""
