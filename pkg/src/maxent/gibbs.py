"""Shannon maximum entropy on a weighted finite set.

Maximizing ``-sum p_k log p_k mu_k`` subject to ``sum p_k mu_k = 1`` and
``sum L_k p_k mu_k = c`` gives the exponential family
``p_k = exp(<theta, L_k>) / Z``.  ``theta`` minimizes the convex
log-partition dual ``psi(theta) = log sum_k mu_k exp(<theta, L_k>) - <theta, c>``.

The Gibbs form ``p_k = exp(-<Lambda, L_k>) / Z`` corresponds to
``Lambda = -theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from ._newton import newton_minimize
from .errors import InputError, MaxIterExceeded, TargetOnBoundary

__all__ = ["FeatureProblem", "GibbsFit", "fit", "shannon_entropy", "free_energy",
           "gaussian_grid_check", "dice", "trapezoid_weights", "interior_margin"]


@dataclass(frozen=True)
class FeatureProblem:
    """Features ``L`` (``d x K``), target ``c`` (``d``) and base weights ``mu`` (``K``)."""

    features: np.ndarray
    target: np.ndarray
    mu: np.ndarray = None

    def __post_init__(self):
        L = np.asarray(self.features, dtype=float)
        if L.ndim == 1:
            L = L[None, :]
        c = np.atleast_1d(np.asarray(self.target, dtype=float))
        if L.shape[0] != c.shape[0]:
            raise InputError(f"{L.shape[0]} feature rows but {c.shape[0]} targets")
        K = L.shape[1]
        mu = np.ones(K) if self.mu is None else np.asarray(self.mu, dtype=float)
        if mu.shape != (K,) or np.any(mu <= 0) or not np.all(np.isfinite(mu)):
            raise InputError("mu must hold K strictly positive finite weights")
        object.__setattr__(self, "features", L)
        object.__setattr__(self, "target", c)
        object.__setattr__(self, "mu", mu)

    @property
    def K(self):
        return self.features.shape[1]

    @property
    def d(self):
        return self.features.shape[0]

    def rank_deficient(self):
        aug = np.vstack([np.ones(self.K), self.features])
        return bool(np.linalg.matrix_rank(aug) < self.d + 1)


@dataclass
class GibbsFit:
    p: np.ndarray
    theta: np.ndarray
    Z: float
    iterations: int
    history: list

    @property
    def Lambda(self):
        return -self.theta


def _dual(fp):
    L, c, logmu = fp.features, fp.target, np.log(fp.mu)

    def oracle(theta, hess):
        s = theta @ L + logmu
        lz = logsumexp(s)
        q = np.exp(s - lz)  # q_k = p_k mu_k
        mean = L @ q
        f = float(lz - theta @ c)
        g = mean - c
        H = None
        if hess:
            Lc = L - mean[:, None]
            H = (Lc * q) @ Lc.T
        return f, g, H

    return oracle


def interior_margin(fp):
    """Largest ``t`` such that some ``q >= t`` with ``sum q = 1``, ``L q = c`` exists.

    ``t > 0`` means the target lies in the relative interior of the moment
    polytope; ``t = 0`` puts it on the boundary; infeasible returns ``-inf``.
    """
    K = fp.K
    # Substitute q = t + r with r >= 0 so only the d + 1 equalities remain.
    cost = np.zeros(K + 1)
    cost[-1] = -1.0
    a_eq = np.zeros((fp.d + 1, K + 1))
    a_eq[0, :K] = 1.0
    a_eq[0, -1] = K
    a_eq[1:, :K] = fp.features
    a_eq[1:, -1] = fp.features.sum(axis=1)
    b_eq = np.concatenate([[1.0], fp.target])
    out = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * (K + 1), method="highs-ds")
    return float(out.x[-1]) if out.status == 0 else -np.inf


def fit(fp, tol=1e-12, max_iter=200):
    """Fit the maximum-entropy exponential family.

    Returns
    -------
    GibbsFit
        ``p`` (density with respect to ``mu``), ``theta``, normalizer
        ``Z = sum_k mu_k exp(<theta, L_k>)``.

    Raises
    ------
    TargetOnBoundary
        The multipliers diverge; the target is on the moment-polytope boundary.
    """
    oracle = _dual(fp)
    res = newton_minimize(oracle, np.zeros(fp.d), tol, max_iter, blowup=1.0 / tol)
    theta = res.x
    q = np.exp(theta @ fp.features + np.log(fp.mu) - logsumexp(theta @ fp.features, b=fp.mu))
    boundary = res.status == "diverged" or np.linalg.norm(theta) > 1.0 / tol
    if not boundary and fp.d and np.linalg.cond(oracle(theta, True)[2]) > 1e14:
        boundary = True
    if not boundary and q.min() < 1e-8:
        boundary = interior_margin(fp) <= 1e-10
    if boundary:
        direction = theta / max(np.linalg.norm(theta), 1e-300)
        raise TargetOnBoundary(f"multipliers diverge along {np.round(direction, 6).tolist()}",
                               best=theta)
    if not res.converged:
        raise MaxIterExceeded(f"fit stopped ({res.status}) with moment residual "
                              f"{res.history[-1]:.3e}", best=theta)
    s = theta @ fp.features
    shift = s.max()
    w = np.exp(s - shift)
    z = float(np.dot(fp.mu, w))
    p = w / z
    return GibbsFit(p, theta, z * np.exp(shift), res.iterations, res.history)


def shannon_entropy(p, mu=None):
    """``-sum_k p_k log(p_k) mu_k`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    mu = np.ones_like(p) if mu is None else np.asarray(mu, dtype=float)
    pos = p > 0
    return float(-np.sum(p[pos] * np.log(p[pos]) * mu[pos]))


def free_energy(h, kT, mu=None):
    """Gibbs distribution ``p ~ exp(-h/kT)`` and its free energy ``<h, p> - kT H(p)``."""
    h = np.asarray(h, dtype=float)
    if not kT > 0:
        raise InputError("kT must be positive")
    mu = np.ones_like(h) if mu is None else np.asarray(mu, dtype=float)
    s = -h / kT
    lz = logsumexp(s, b=mu)
    p = np.exp(s - lz)
    return p, float(np.sum(h * p * mu) - kT * shannon_entropy(p, mu))


def trapezoid_weights(x):
    """Trapezoid quadrature weights on the nodes ``x``."""
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def gaussian_grid_check(sigma2, R=8.0, size=4096, tol=1e-12):
    """Fit features ``(x, x^2)`` with target ``(0, sigma2)`` on ``[-R, R]``.

    Returns
    -------
    deviation : float
        ``max_k |p_k - N(x_k; 0, sigma2)|``.
    fit : GibbsFit
    """
    if not sigma2 > 0:
        raise InputError("variance must be positive")
    if R < 6 * np.sqrt(sigma2) or size < 2048:
        raise InputError("need R >= 6 sigma and at least 2048 points")
    x = np.linspace(-R, R, size)
    fp = FeatureProblem(np.vstack([x, x * x]), [0.0, sigma2], trapezoid_weights(x))
    res = fit(fp, tol=tol)
    gauss = np.exp(-x * x / (2 * sigma2)) / np.sqrt(2 * np.pi * sigma2)
    return float(np.max(np.abs(res.p - gauss))), res


def dice(mean, faces=6, tol=1e-12):
    """Maximum-entropy distribution of a die with a prescribed mean."""
    k = np.arange(1, faces + 1, dtype=float)
    return fit(FeatureProblem(k[None, :], [mean]), tol=tol)
