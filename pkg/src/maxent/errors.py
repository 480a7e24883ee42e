"""Exception hierarchy shared by all solvers."""


class MaxEntError(Exception):
    """Base class for every error raised by this package."""


class InputError(MaxEntError, ValueError):
    """Input data violates a stated invariant (dimension, positivity, ...)."""


class NotPositive(InputError):
    pass


class NotInRange(InputError):
    pass


class PickNotPD(InputError):
    pass


class NotScalar(InputError):
    pass


class SolverError(MaxEntError):
    """The numerical method failed.  ``best`` holds the last usable iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class Infeasible(SolverError):
    pass


class DualDiverged(SolverError):
    pass


class MaxIterExceeded(SolverError):
    pass


class TargetOnBoundary(SolverError):
    pass


class DegenerateLambda(SolverError):
    pass
