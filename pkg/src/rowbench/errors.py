"""Exception types raised across the package."""


class RowBenchError(Exception):
    """Base class for all package errors."""


class InvalidParams(RowBenchError, ValueError):
    pass


class UnknownPreset(RowBenchError, KeyError):
    pass


class OutOfBounds(RowBenchError, ValueError):
    pass


class InvalidPose(RowBenchError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"pose {index}: {message}")
        self.index = index


class EmptyMask(RowBenchError, ValueError):
    pass


class NoFreePassage(RowBenchError):
    """No column of the mask qualifies as free; a control signal, not a crash."""


class GoalBehind(RowBenchError, ValueError):
    pass


class ShapeMismatch(RowBenchError, ValueError):
    pass


class EmptyBatch(RowBenchError, ValueError):
    pass


class WriteError(RowBenchError, OSError):
    pass


class ConfigError(RowBenchError, ValueError):
    pass
