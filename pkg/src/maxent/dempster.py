"""Maximum-entropy (Dempster) completion of a partially specified covariance.

The completion ``Sigma_c`` matches the specified entries and its inverse
vanishes on every unspecified position.  It is computed from the dual

    minimize  tr(K S) - log det K   over  K > 0 supported on the pattern,

where ``S`` holds the specified entries; then ``Sigma_c = K^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._newton import logdet_dual
from .core import SubspaceBasis, is_pd, orthogonality_residual
from .errors import Infeasible, InputError, MaxIterExceeded, NotPositive

__all__ = ["Pattern", "PartialCov", "complete", "gaussian_entropy", "free_basis"]


@dataclass(frozen=True)
class Pattern:
    """Specified positions ``(i, j)``, ``i <= j``, 0-based.

    Every diagonal position must be specified.
    """

    n: int
    specified: frozenset

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InputError("pattern dimension must be at least 1")
        pairs = set()
        for i, j in self.specified:
            i, j = int(i), int(j)
            if i > j:
                i, j = j, i
            if i < 0 or j >= n:
                raise InputError(f"index pair ({i}, {j}) outside [0, {n})")
            pairs.add((i, j))
        missing = [i for i in range(n) if (i, i) not in pairs]
        if missing:
            raise InputError(f"diagonal entries must be specified; missing {missing}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "specified", frozenset(pairs))

    def pairs(self):
        return sorted(self.specified)

    def free(self):
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)
                if (i, j) not in self.specified]


class PartialCov:
    """Pattern plus values on the specified positions.

    Parameters
    ----------
    pattern : Pattern
    values : dict
        Maps each specified pair ``(i, j)`` to a real number.
    """

    def __init__(self, pattern, values):
        self.pattern = pattern
        vals = {}
        for (i, j), v in values.items():
            key = (min(i, j), max(i, j))
            if key not in pattern.specified:
                raise InputError(f"value given for unspecified position {key}")
            vals[key] = float(v)
        absent = pattern.specified - set(vals)
        if absent:
            raise InputError(f"no value for specified positions {sorted(absent)}")
        for i in range(pattern.n):
            if not vals[(i, i)] > 0:
                raise NotPositive(f"diagonal entry ({i}, {i}) must be positive")
        for (i, j), v in vals.items():
            if i != j and abs(v) > np.sqrt(vals[(i, i)] * vals[(j, j)]):
                raise Infeasible(f"|sigma_{i}{j}| exceeds sqrt(sigma_ii sigma_jj)")
        self.values = vals

    @classmethod
    def from_matrix(cls, sigma, pattern):
        sigma = np.asarray(sigma, dtype=float)
        return cls(pattern, {p: sigma[p] for p in pattern.specified})

    @property
    def n(self):
        return self.pattern.n

    def matrix(self, fill=0.0):
        """Dense symmetric matrix with ``fill`` on unspecified positions."""
        s = np.full((self.n, self.n), float(fill))
        for (i, j), v in self.values.items():
            s[i, j] = s[j, i] = v
        return s

    def constraint_residual(self, sigma):
        sigma = np.asarray(sigma)
        return max(abs(sigma[i, j] - v) for (i, j), v in self.values.items())


def _unit(n, i, j):
    e = np.zeros((n, n))
    e[i, j] = e[j, i] = 1.0
    return e


def free_basis(pattern):
    """Basis of ``V``: symmetric matrices supported on the unspecified positions."""
    return SubspaceBasis([_unit(pattern.n, i, j) for i, j in pattern.free()], n=pattern.n)


def complete(p, tol=1e-9, max_iter=200, return_info=False):
    """Maximum-entropy completion of ``p``.

    Parameters
    ----------
    p : PartialCov
    tol : float
        Bound on ``max |Sigma_ij - sigma_ij|`` over specified positions.
    max_iter : int

    Returns
    -------
    sigma : ndarray
        Positive-definite completion.
    info : dict, optional
        Iterations and residuals, when ``return_info`` is true.

    Raises
    ------
    Infeasible
        No positive-definite completion exists (the dual is unbounded).
    MaxIterExceeded
        ``best`` holds the last iterate.
    """
    n = p.n
    pairs = p.pattern.pairs()
    basis = np.array([_unit(n, i, j) for i, j in pairs])[:, None]
    mult = np.array([1.0 if i == j else 2.0 for i, j in pairs])
    c = mult * np.array([p.values[q] for q in pairs])
    x0 = np.array([1.0 / p.values[q] if q[0] == q[1] else 0.0 for q in pairs])

    def stop(x, g):
        return float(np.max(np.abs(g / mult)))

    res, K = logdet_dual(basis, c, x0=x0, tol=tol, max_iter=max_iter,
                         blowup=max(1.0 / tol, 1e8), stop=stop)
    K = K[0]
    if res.status in ("diverged", "stalled") and not res.converged:
        if res.status == "diverged" or not is_pd(K):
            raise Infeasible("dual diverged: no positive-definite completion exists")
    sigma = np.linalg.inv(K)
    sigma = 0.5 * (sigma + sigma.T)
    if not res.converged:
        resid = p.constraint_residual(sigma)
        if res.status == "stalled" and resid <= 10 * tol:
            pass
        else:
            raise MaxIterExceeded(
                f"no convergence after {res.iterations} iterations "
                f"(constraint residual {resid:.3e})", best=sigma)
    if not return_info:
        return sigma
    info = {
        "iterations": res.iterations,
        "converged": True,
        "constraint_residual": p.constraint_residual(sigma),
        "orthogonality_residual": orthogonality_residual(K, free_basis(p.pattern)),
    }
    return sigma, info


def gaussian_entropy(sigma):
    """Differential entropy ``(1/2) log det Sigma + (n/2)(1 + log 2 pi)``."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if not is_pd(sigma):
        raise NotPositive("covariance is not positive definite")
    n = sigma.shape[0]
    _, ld = np.linalg.slogdet(sigma)
    return 0.5 * ld + 0.5 * n * (1.0 + np.log(2.0 * np.pi))
