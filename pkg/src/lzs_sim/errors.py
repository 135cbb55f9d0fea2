"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for runtime failures of the simulation engine."""


class NonConvergent(SimulationError):
    """Neither the direct stationary solve nor the relaxation fallback
    reached the required residual.

    Carries the (eps, amp) grid coordinates when raised from a sweep.
    """

    def __init__(self, message, eps=None, amp=None):
        if eps is not None or amp is not None:
            message = f"{message} (eps={eps} GHz, amp={amp} GHz)"
        super().__init__(message)
        self.eps = eps
        self.amp = amp


class StepRejected(SimulationError):
    """The linear solve inside an implicit integration step failed."""


class DegenerateSystem(SimulationError):
    """A closed-form stationary solution was requested for an all-zero
    rate system, which has no distinguished stationary state."""


class InsufficientLevels(SimulationError):
    """An analysis needs more ladder levels than the model provides."""


class ValidationError(ValueError):
    """A constructed object or parsed configuration violates an invariant."""


class ParseError(ValueError):
    """Malformed configuration text.  Reports 1-based line and column."""

    def __init__(self, message, line, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
