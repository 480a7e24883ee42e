"""Maximum-entropy solvers under linear constraints.

Covariance completion, spectral extension and interpolation, divergence
approximation with priors, reciprocal (circulant) processes, exponential
families and Schrödinger bridges, all sharing one optimality certificate:
the entropy gradient at the optimum is orthogonal to the constraint
directions.
"""

from . import bridge, burg, check, circulant, core, dempster, gibbs, io, moment, prior
from .errors import (DegenerateLambda, DualDiverged, Infeasible, InputError, MaxEntError,
                     MaxIterExceeded, NotInRange, NotPositive, NotScalar, PickNotPD, SolverError,
                     TargetOnBoundary)

__version__ = "0.1.0"

__all__ = [
    "bridge", "burg", "check", "circulant", "core", "dempster", "gibbs", "io", "moment", "prior",
    "MaxEntError", "InputError", "NotPositive", "NotInRange", "PickNotPD", "NotScalar",
    "SolverError", "Infeasible", "DualDiverged", "MaxIterExceeded", "TargetOnBoundary",
    "DegenerateLambda",
]
