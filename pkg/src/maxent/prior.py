"""Entropy problems with a prior.

* :func:`matrix_prior_solve` minimizes the Gaussian divergence
  ``log det N - log det M + tr(N^{-1} M)`` over an affine set ``W``.  The
  optimum satisfies ``M_c^{-1} - N^{-1} in V^perp``.
* :func:`cov_approx` projects an estimated state covariance onto
  ``Range Gamma`` in the same divergence.
* :func:`is_spectral_solve` and :func:`kl_spectral_solve` approximate a prior
  spectrum under the moment constraint ``Gamma(Phi) = Sigma``.

All solvers run Newton's method on the concave dual, parametrized by an
orthonormal basis of the relevant ``V^perp``.
"""

from __future__ import annotations

import numpy as np

from ._newton import logdet_dual, newton_minimize
from .core import (AffineProblem, SpectrumGrid, SubspaceBasis, _is_real, _realvec, hermitian,
                   hermitian_basis, is_pd, orthogonality_residual, quadrature)
from .errors import (DualDiverged, Infeasible, InputError, MaxIterExceeded, NotInRange,
                     NotPositive, NotScalar)
from .moment import RANGE_TOL, _range_parts, gamma_adjoint, gamma_apply, range_basis, range_residual

__all__ = [
    "divergence",
    "matrix_prior_solve",
    "cov_approx",
    "delta_form",
    "sample_covariance",
    "is_spectral_solve",
    "kl_spectral_solve",
    "itakura_saito_rate",
]


def divergence(m, n):
    """``log det N - log det M + tr(N^{-1} M)``."""
    _, ln = np.linalg.slogdet(n)
    _, lm = np.linalg.slogdet(m)
    return float(ln - lm + np.real(np.trace(np.linalg.solve(n, m))))


def matrix_prior_solve(N, problem, tol=1e-8, max_iter=500, return_info=False):
    """Minimize the divergence from the prior ``N`` over ``problem``.

    Parameters
    ----------
    N : array_like
        Positive-definite prior.
    problem : AffineProblem
        ``W = offset + span(basis)``.

    Returns
    -------
    M : ndarray
    info : dict, optional
        ``lam`` (coordinates of ``M^{-1} - N^{-1}`` in the ``V^perp`` basis),
        ``iterations`` and residuals.
    """
    N = hermitian(N, dim=problem.n)
    if not is_pd(N):
        raise NotPositive("prior N is not positive definite")
    real = _is_real(N, problem.offset) and problem.basis.is_real
    perp = problem.basis.complement(real=real)
    a0 = problem.offset
    Ninv = np.linalg.inv(N)
    Ninv = 0.5 * (Ninv + Ninv.conj().T)
    if real:
        Ninv = Ninv.real
    if len(perp) == 0:
        M = N.real if real else N
        its, lam = 0, np.zeros(0)
    else:
        U = perp.elements
        c = np.array([np.real(np.vdot(u, a0)) for u in U])
        res, Q = logdet_dual(U[:, None], c, offset=Ninv[None], tol=tol, max_iter=max_iter,
                             blowup=max(1.0 / tol, 1e10))
        M = np.linalg.inv(Q[0])
        M = 0.5 * (M + M.conj().T)
        if res.status == "diverged":
            raise Infeasible("dual diverged: W contains no positive-definite point", best=M)
        if not res.converged:
            raise MaxIterExceeded(
                f"dual stopped ({res.status}) with residual {res.history[-1]:.3e}", best=M)
        its, lam = res.iterations, res.x
    if not return_info:
        return M
    info = {
        "lam": lam,
        "iterations": its,
        "constraint_residual": problem.distance(M),
        "orthogonality_residual": orthogonality_residual(np.linalg.inv(M) - Ninv, problem.basis),
    }
    return M, info


def delta_form(fb, lam):
    """``(I - Pi_B) Lambda (I - Pi_B) - A^* (I - Pi_B) Lambda (I - Pi_B) A``."""
    proj = _range_parts(fb)
    inner = proj @ lam @ proj
    return inner - fb.A.conj().T @ inner @ fb.A


def cov_approx(fb, sigma_hat, tol=1e-8, max_iter=500, return_info=False):
    """Closest point of ``Range Gamma`` to ``sigma_hat`` in the Gaussian divergence.

    Returns
    -------
    sigma_c : ndarray
    info : dict, optional
        Includes ``Lambda`` (a least-squares fit of ``sigma_c^{-1} -
        sigma_hat^{-1}`` to :func:`delta_form`) and ``Lambda_residual``.
    """
    sigma_hat = hermitian(sigma_hat, dim=fb.n)
    if not is_pd(sigma_hat):
        raise NotPositive("sigma_hat is not positive definite")
    real = fb.is_real and _is_real(sigma_hat)
    rb = range_basis(fb, real=real)
    problem = AffineProblem(np.zeros((fb.n, fb.n)), SubspaceBasis(rb))
    M, info = matrix_prior_solve(sigma_hat, problem, tol=tol, max_iter=max_iter, return_info=True)
    if not return_info:
        return M
    d = np.linalg.inv(M) - np.linalg.inv(sigma_hat)
    amb = hermitian_basis(fb.n, real=real)
    cols = _realvec(np.array([delta_form(fb, e) for e in amb])).T
    coef = np.linalg.lstsq(cols, _realvec(d), rcond=None)[0]
    lam = np.tensordot(coef, amb, axes=1)
    nd = np.linalg.norm(d)
    info["Lambda"] = lam
    info["Lambda_residual"] = float(np.linalg.norm(delta_form(fb, lam) - d) / nd) if nd else 0.0
    info["range_residual"] = range_residual(fb, M)
    return M, info


def sample_covariance(fb, y, burn_in=None):
    """Average state outer product of ``x_{k+1} = A x_k + B y_k``, ``x_0 = 0``.

    Parameters
    ----------
    y : array_like, shape (T, m) or (T,)
    burn_in : int, optional
        Number of initial states discarded (default ``10 n``).
    """
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[1] != fb.m:
        raise InputError(f"series has {y.shape[1]} channels, filter bank expects {fb.m}")
    if burn_in is None:
        burn_in = 10 * fb.n
    T = y.shape[0]
    if T <= burn_in + fb.n:
        raise InputError(f"series of length {T} too short for burn_in {burn_in}")
    dtype = np.result_type(fb.A, fb.B, y)
    u = y @ fb.B.T
    x = np.zeros(fb.n, dtype=dtype)
    states = np.empty((T, fb.n), dtype=dtype)
    A = fb.A
    for k in range(T):
        x = A @ x + u[k]
        states[k] = x
    kept = states[burn_in:]
    s = kept.T @ kept.conj() / kept.shape[0]
    return 0.5 * (s + s.conj().T)


def _check_spectral(fb, sigma, psi):
    sigma = hermitian(sigma, dim=fb.n)
    if not is_pd(sigma):
        raise NotPositive("Sigma is not positive definite")
    res = range_residual(fb, sigma)
    if res > RANGE_TOL:
        raise NotInRange(f"Sigma is not in Range Gamma (residual {res:.3e})")
    if not isinstance(psi, SpectrumGrid):
        psi = SpectrumGrid(np.asarray(psi))
    if psi.m != fb.m:
        raise InputError(f"prior block size {psi.m} differs from m={fb.m}")
    if not psi.is_coercive():
        raise NotPositive("prior spectrum is not coercive on the grid")
    return sigma, psi


def is_spectral_solve(fb, sigma, psi, tol=1e-8, max_iter=500, return_info=False):
    """Itakura-Saito approximation of ``psi`` subject to ``Gamma(Phi) = Sigma``.

    The solution is ``Phi_c = (Psi^{-1} + G^* Lambda_c G)^{-1}``.

    Returns
    -------
    phi : SpectrumGrid
    lam : ndarray
        ``Lambda_c`` in ``Range Gamma``.
    """
    sigma, psi = _check_spectral(fb, sigma, psi)
    size = psi.size
    rb = range_basis(fb)
    grids = np.array([gamma_adjoint(fb, e, size).values for e in rb])
    c = np.array([np.real(np.vdot(e, sigma)) for e in rb])
    res, q = logdet_dual(grids, c, offset=np.linalg.inv(psi.values), scale=1.0 / size,
                         tol=tol * max(1.0, np.linalg.norm(sigma)), max_iter=max_iter,
                         blowup=max(1.0 / tol, 1e10))
    lam = np.tensordot(res.x, rb, axes=1)
    phi = SpectrumGrid(np.linalg.inv(q))
    if res.status == "diverged":
        raise DualDiverged("Itakura-Saito dual diverged", best=(phi, lam))
    if not res.converged:
        raise MaxIterExceeded(f"dual stopped ({res.status}) with residual {res.history[-1]:.3e}",
                              best=(phi, lam))
    if not return_info:
        return phi, lam
    return phi, lam, {"iterations": res.iterations,
                      "constraint_residual": _moment_residual(fb, phi, sigma)}


def _moment_residual(fb, phi, sigma):
    return float(np.linalg.norm(gamma_apply(fb, phi) - sigma) / np.linalg.norm(sigma))


def kl_spectral_solve(fb, sigma, psi, tol=1e-8, max_iter=500, return_info=False):
    """Scalar Kullback-Leibler approximation ``min D(Psi || Phi)`` with ``Gamma(Phi) = Sigma``.

    The solution is ``Phi_c = Psi / (G^* Lambda_c G)``.  The dual is
    started from the ``Range Gamma`` component of the identity.
    """
    if fb.m != 1:
        raise NotScalar("Kullback-Leibler approximation is implemented for m = 1 only")
    sigma, psi = _check_spectral(fb, sigma, psi)
    size = psi.size
    w = psi.scalar()
    rb = range_basis(fb)
    coords0 = np.array([np.real(np.vdot(e, np.eye(fb.n))) for e in rb])
    grids = np.array([gamma_adjoint(fb, e, size).scalar() for e in rb])
    c = np.array([np.real(np.vdot(e, sigma)) for e in rb])

    def oracle(x, hess):
        q = grids.T @ x
        if np.any(q <= 0) or not np.all(np.isfinite(q)):
            return None
        f = float(c @ x - quadrature(w * np.log(q)))
        r = w / q
        g = c - quadrature((grids * r).T)
        H = None
        if hess:
            s = grids * (r / q)
            H = (s @ grids.T) / size
        return f, g, H

    res = newton_minimize(oracle, coords0, tol * max(1.0, np.linalg.norm(sigma)), max_iter,
                          blowup=max(1.0 / tol, 1e10))
    lam = np.tensordot(res.x, rb, axes=1)
    phi = SpectrumGrid(w / (grids.T @ res.x))
    if res.status == "diverged":
        raise DualDiverged("Kullback-Leibler dual diverged", best=(phi, lam))
    if not res.converged:
        raise MaxIterExceeded(f"dual stopped ({res.status}) with residual {res.history[-1]:.3e}",
                              best=(phi, lam))
    if not return_info:
        return phi, lam
    return phi, lam, {"iterations": res.iterations,
                      "constraint_residual": _moment_residual(fb, phi, sigma)}


def itakura_saito_rate(phi_y, phi_z):
    """``(1/4pi) int {log det(Phi_y^{-1} Phi_z) + tr[Phi_z^{-1}(Phi_y - Phi_z)]}``."""
    if phi_y.values.shape != phi_z.values.shape:
        raise InputError("spectra must share grid size and block dimension")
    if not (phi_y.is_coercive() and phi_z.is_coercive()):
        raise NotPositive("spectra must be coercive")
    ly = np.log(np.linalg.eigvalsh(phi_y.values)).sum(axis=1)
    lz = np.log(np.linalg.eigvalsh(phi_z.values)).sum(axis=1)
    tr = np.real(np.trace(np.linalg.solve(phi_z.values, phi_y.values - phi_z.values),
                          axis1=1, axis2=2))
    return 0.5 * float(quadrature(lz - ly + tr))
