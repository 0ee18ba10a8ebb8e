"""Exception hierarchy for greenbench."""


class GreenbenchError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GreenbenchError, ValueError):
    """A value or document violates a declared invariant."""


# metrics
class ZeroThroughput(GreenbenchError, ValueError):
    pass


class NonPositivePower(GreenbenchError, ValueError):
    pass


class ReducedExceedsFull(GreenbenchError, ValueError):
    pass


class StateOrderViolation(GreenbenchError, ValueError):
    pass


class UnknownInterfaceClass(GreenbenchError, KeyError):
    pass


class MissingPacketSize(GreenbenchError, KeyError):
    pass


class InvalidMeasurementSet(GreenbenchError):
    """Raised when a metric is requested from an invalidated test."""


# device
class PacketSizeUnknown(GreenbenchError, KeyError):
    pass


class UnknownState(GreenbenchError, KeyError):
    pass


# orchestrator
class WarmupTimeout(GreenbenchError):
    pass


class NoPassingRate(GreenbenchError):
    pass


class UnexpectedLoss(GreenbenchError):
    pass


# reporting
class MetricAbsentEverywhere(GreenbenchError):
    pass
