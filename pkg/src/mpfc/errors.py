"""Exception types raised by the solver stack."""


class MPFCError(Exception):
    """Base class for all package errors."""


class NonZeroMean(MPFCError):
    """A field that must lie in the mean-zero space does not."""


class NoConvergence(MPFCError):
    """An iterative solver missed its residual target.

    ``history`` holds the per-cycle residual norms reached before giving up,
    ``step`` the time-step index when raised from inside a time integrator.
    """

    def __init__(self, message, history=None, step=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.step = step


class SingularLocalSystem(MPFCError):
    """A per-cell 3x3 smoother system was numerically singular."""


class DomainMismatch(MPFCError):
    """The grid does not match the domain an initial condition is defined on."""


class GridMismatch(MPFCError):
    """Two fields that must share a grid do not."""


class ComplexAmplitude(MPFCError):
    """The single-mode crystal amplitude would be complex."""
