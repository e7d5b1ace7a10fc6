"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DegeneracyError(ArithmeticError):
    """The two lowest levels touch (zero gap) where a gap is required."""


class ScheduleDegenerateError(ArithmeticError):
    """The adiabatic criterion cannot be saturated (vanishing coupling)."""


class CapExceededError(ValueError):
    """A brute-force routine was asked to work above its size cap."""


class NonConvergenceError(RuntimeError):
    """A numerical routine failed to converge.

    ``partial`` carries the best available estimate (a partial integral, the
    last good ODE state, or a partial trace) and ``t`` the time it refers to,
    when that makes sense.
    """

    def __init__(self, message, partial=None, t=None):
        super().__init__(message)
        self.partial = partial
        self.t = t
