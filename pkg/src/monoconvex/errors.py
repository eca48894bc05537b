class MonoconvexError(Exception):
    """Base class for library errors."""


class PreconditionFailed(MonoconvexError):
    pass


class InvalidInstance(MonoconvexError):
    pass


class NotInLattice(MonoconvexError):
    pass


class OffWindow(MonoconvexError):
    pass


class DimensionTooLarge(MonoconvexError):
    pass


class UnboundedHull(MonoconvexError):
    pass


class NotAdditive(MonoconvexError):
    pass


class RelationDoesNotHold(MonoconvexError):
    pass


class CorePrereqFailed(MonoconvexError):
    pass


class NotStabilized(MonoconvexError):
    pass


class HypothesisFailed(MonoconvexError):
    pass


class EmptyProbeSet(MonoconvexError):
    pass


class BoundsExhausted(MonoconvexError):
    pass


class NotSeparating(MonoconvexError):
    pass


class NegativeMultiplier(MonoconvexError):
    pass


class UnsupportedDual(MonoconvexError):
    pass
