"""Exception hierarchy shared by all erkc modules."""


class ERKCError(Exception):
    """Base class for every error raised by this package."""


class ConfluentNodes(ERKCError, ValueError):
    pass


class NodeOutOfRange(ERKCError, ValueError):
    pass


class StageIndexError(ERKCError, IndexError):
    pass


class DimensionError(ERKCError, ValueError):
    pass


class ZeroEigenvalueNegativePower(ERKCError, ValueError):
    pass


class NonmonotoneDeviatedArgument(ERKCError, ValueError):
    pass


class DelayTooSmall(ERKCError, ValueError):
    """tau(t) dropped below the declared lower bound tau0."""


class BracketFailure(ERKCError, RuntimeError):
    pass


class StepExceedsTauZero(ERKCError, ValueError):
    pass


class EmptySegment(ERKCError, ValueError):
    pass


class OutOfDomain(ERKCError, ValueError):
    pass


class FutureEvaluation(ERKCError, ValueError):
    pass


class StencilUnavailable(ERKCError, ValueError):
    pass


class FixedPointDivergence(ERKCError, RuntimeError):
    pass


class InsufficientData(ERKCError, ValueError):
    pass
