"""Exception types raised across the package."""


class MaelensError(Exception):
    """Base class for all errors raised by maelens."""


class DimensionError(MaelensError, ValueError):
    """Shapes of matrices, layouts or vectors do not agree."""


class NotPositiveDefiniteError(MaelensError, ValueError):
    """A matrix that must be PSD/SPD is not, beyond tolerance."""


class SingularSystemError(MaelensError, ValueError):
    """A linear system is numerically singular."""


class ConvergenceError(MaelensError, RuntimeError):
    """An underlying eigensolver failed to converge."""


class DivergenceError(MaelensError, RuntimeError):
    """Training diverged. The recorded loss trace is kept on ``trace``."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = [] if trace is None else list(trace)
