"""Exception hierarchy shared by every module."""


class HapticsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HapticsError, ValueError):
    pass


class ConfigurationError(HapticsError):
    """Embedded data or configuration is corrupt."""


class DegenerateGeometryError(HapticsError, ValueError):
    def __init__(self, message: str, rank=None):
        super().__init__(message)
        self.rank = rank


class UndefinedPerceptionError(HapticsError, ValueError):
    pass


class NoGraspError(HapticsError, ValueError):
    pass


class InsufficientDataError(HapticsError, ValueError):
    pass


class FormatError(HapticsError, ValueError):
    pass


class TunnelingError(HapticsError):
    """A HIP moved further in one tick than the collision step allows."""

    def __init__(self, message: str, tick=None, finger=None, jump=None):
        super().__init__(message)
        self.tick = tick
        self.finger = finger
        self.jump = jump
