"""Generalized moment problem for a stable filter bank ``G(z) = (zI - A)^{-1} B``.

The operator ``Gamma`` maps a spectrum ``Phi`` to the state covariance
``(1/2pi) int G Phi G^* dtheta``; its adjoint sends a Hermitian ``M`` to the
grid function ``G^* M G``.  The maximum-entropy spectrum matching
``Gamma(Phi) = Sigma`` has ``Phi_c^{-1} = G^* Lambda_c G`` with Georgiou's
closed form for ``Lambda_c``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .core import (PINV_CUTOFF, SpectrumGrid, _check_grid_size, _realvec, frequency_grid,
                   hermitian, hermitian_basis, is_pd, pseudo_polynomial, quadrature)
from .errors import DegenerateLambda, InputError, NotInRange, NotPositive, PickNotPD, NotScalar

__all__ = [
    "FilterBank",
    "eval_G",
    "gamma_apply",
    "gamma_adjoint",
    "range_residual",
    "range_basis",
    "maxent_spectrum",
    "lyapunov",
    "covariance_extension_bank",
    "pick_matrix",
    "pick_to_problem",
    "recover_interpolants",
    "kernel_samples",
    "RANGE_TOL",
]

RANGE_TOL = 1e-6


class FilterBank:
    """Stable reachable pair ``(A, B)``.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Spectral radius below ``1 - 1e-9``.
    B : array_like, shape (n, m)
        Full column rank.
    """

    def __init__(self, A, B):
        A = np.atleast_2d(np.asarray(A))
        B = np.asarray(B)
        if B.ndim == 1:
            B = B[:, None]
        n = A.shape[0]
        if A.shape != (n, n) or B.ndim != 2 or B.shape[0] != n:
            raise InputError(f"incompatible shapes A {A.shape}, B {B.shape}")
        m = B.shape[1]
        if m > n:
            raise InputError("input dimension m exceeds state dimension n")
        if np.max(np.abs(np.linalg.eigvals(A))) >= 1 - 1e-9:
            raise InputError("A is not stable (spectral radius >= 1 - 1e-9)")
        if np.linalg.matrix_rank(B) < m:
            raise InputError("B does not have full column rank")
        blocks = [B]
        for _ in range(n - 1):
            blocks.append(A @ blocks[-1])
        if np.linalg.matrix_rank(np.hstack(blocks)) < n:
            raise InputError("(A, B) is not reachable")
        self.A = A.astype(complex) if np.iscomplexobj(A) else A.astype(float)
        self.B = B.astype(complex) if np.iscomplexobj(B) else B.astype(float)
        self.A.setflags(write=False)
        self.B.setflags(write=False)
        self._cache = {}

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def is_real(self):
        return not (np.iscomplexobj(self.A) or np.iscomplexobj(self.B))

    def grid(self, size):
        """``G(e^{j theta_k})`` for the whole grid, shape ``(size, n, m)``."""
        if size not in self._cache:
            self._cache[size] = eval_G(self, frequency_grid(size))
            self._cache[size].setflags(write=False)
        return self._cache[size]


def eval_G(fb, theta):
    """``(e^{j theta} I - A)^{-1} B``; vectorized over ``theta``."""
    theta = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta)
    eye = np.eye(fb.n)
    M = z[..., None, None] * eye - fb.A
    rhs = np.broadcast_to(fb.B, M.shape[:-2] + fb.B.shape)
    return np.linalg.solve(M, rhs)


def _grid_of(phi):
    return phi.values if isinstance(phi, SpectrumGrid) else np.asarray(phi)


def gamma_apply(fb, phi):
    """``Gamma(Phi) = (1/2pi) int G Phi G^* dtheta`` on the grid."""
    vals = _grid_of(phi)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    if vals.shape[1] != fb.m:
        raise InputError(f"spectrum block size {vals.shape[1]} differs from m={fb.m}")
    g = fb.grid(vals.shape[0])
    out = quadrature(g @ vals @ np.conj(np.swapaxes(g, 1, 2)))
    return 0.5 * (out + out.conj().T)


def gamma_adjoint(fb, m, size=4096):
    """``Gamma^*(M) = G^* M G`` as a :class:`SpectrumGrid`."""
    m = hermitian(m, dim=fb.n)
    _check_grid_size(size)
    g = fb.grid(size)
    return SpectrumGrid(np.conj(np.swapaxes(g, 1, 2)) @ m @ g)


def _range_parts(fb):
    q, _ = np.linalg.qr(fb.B)
    proj = np.eye(fb.n) - q @ q.conj().T
    return proj


def _range_map(fb, sigma, proj=None):
    if proj is None:
        proj = _range_parts(fb)
    return proj @ (sigma - fb.A @ sigma @ fb.A.conj().T) @ proj


def range_residual(fb, sigma):
    """``|(I - Pi_B)(Sigma - A Sigma A^*)(I - Pi_B)| / |Sigma|`` (Frobenius)."""
    sigma = hermitian(sigma, dim=fb.n)
    ns = np.linalg.norm(sigma)
    if ns == 0:
        return 0.0
    return float(np.linalg.norm(_range_map(fb, sigma)) / ns)


def range_basis(fb, real=False):
    """Orthonormal basis of ``Range Gamma`` inside the Hermitian matrices.

    ``real=True`` restricts to real symmetric matrices (valid for real
    ``A, B``).  Returns an array of shape ``(d, n, n)``.
    """
    if real and not fb.is_real:
        raise InputError("real range basis needs real A and B")
    amb = hermitian_basis(fb.n, real=real)
    proj = _range_parts(fb)
    images = np.array([_range_map(fb, e, proj) for e in amb])
    mat = _realvec(images).T
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0))) if s.size else 0
    null = vh[rank:]
    return np.tensordot(null, amb, axes=1)


def lyapunov(A, B):
    """Solve ``X = A X A^* + B B^*``."""
    A = np.atleast_2d(np.asarray(A))
    B = np.asarray(B)
    if B.ndim == 1:
        B = B[:, None]
    X = solve_discrete_lyapunov(A, B @ B.conj().T)
    return 0.5 * (X + X.conj().T)


def maxent_spectrum(fb, sigma, size=4096):
    """Georgiou's maximum-entropy solution of ``Gamma(Phi) = Sigma``.

    Returns
    -------
    phi : SpectrumGrid
        ``(G^* Lambda_c G)^{-1}``.
    lam : ndarray
        ``Sigma^{-1} B (B^* Sigma^{-1} B)^{-1} B^* Sigma^{-1}``.
    """
    sigma = hermitian(sigma, dim=fb.n)
    if not is_pd(sigma):
        raise NotPositive("Sigma is not positive definite")
    res = range_residual(fb, sigma)
    if res > RANGE_TOL:
        raise NotInRange(f"Sigma is not in Range Gamma (residual {res:.3e})")
    si = np.linalg.inv(sigma)
    sb = si @ fb.B
    core = fb.B.conj().T @ sb
    if np.linalg.cond(core) > 1e12:
        raise DegenerateLambda("B^* Sigma^{-1} B is singular")
    lam = sb @ np.linalg.solve(core, sb.conj().T)
    lam = 0.5 * (lam + lam.conj().T)
    q = gamma_adjoint(fb, lam, size)
    if not q.is_coercive():
        raise DegenerateLambda("G^* Lambda_c G is not positive on the grid")
    return q.inv(), lam


def covariance_extension_bank(n, m=1):
    """Filter bank with ``G = [z^{-1} I; z^{-2} I; ...; z^{-n} I]``.

    Its state covariance ``Gamma(Phi)`` is the block-Toeplitz matrix of the
    first ``n`` lags of ``Phi``.
    """
    A = np.kron(np.eye(n, k=-1), np.eye(m))
    B = np.zeros((n * m, m))
    B[:m] = np.eye(m)
    return FilterBank(A, B)


def pick_matrix(points, values):
    """``Sigma_ij = (w_i + conj(w_j)) / (1 - p_i conj(p_j))``."""
    p = np.asarray(points, dtype=complex)
    w = np.asarray(values, dtype=complex)
    return (w[:, None] + np.conj(w)[None, :]) / (1.0 - p[:, None] * np.conj(p)[None, :])


def pick_to_problem(points, values):
    """Filter bank ``A = diag(p)``, ``B = 1`` and the Pick matrix.

    Raises
    ------
    PickNotPD
        The interpolation problem has no strictly positive-real solution.
    """
    p = np.asarray(points, dtype=complex).ravel()
    w = np.asarray(values, dtype=complex).ravel()
    if p.shape != w.shape or p.size == 0:
        raise InputError("points and values must be nonempty and of equal length")
    if np.any(np.abs(p) >= 1):
        raise InputError("points must lie in the open unit disc")
    if len(set(np.round(p, 14))) < p.size:
        raise InputError("points must be distinct")
    sigma = hermitian(pick_matrix(p, w))
    if not is_pd(sigma):
        raise PickNotPD("Pick matrix is not positive definite")
    A = np.diag(p)
    if not np.any(p.imag):
        A = A.real
    return FilterBank(A, np.ones((p.size, 1))), sigma


def recover_interpolants(phi, points):
    """``w_k = (1/4pi) int (e^{j theta} + p_k)/(e^{j theta} - p_k) Phi dtheta``.

    The values are determined by ``Phi`` up to a common imaginary constant;
    this returns the member whose constant matches ``Re Z`` alone.
    """
    if isinstance(phi, SpectrumGrid):
        if phi.m != 1:
            raise NotScalar("interpolant recovery needs a scalar spectrum")
        f = phi.scalar()
        size = phi.size
    else:
        f = np.asarray(phi, dtype=float)
        size = f.size
    z = np.exp(1j * frequency_grid(size))
    p = np.asarray(points, dtype=complex).ravel()
    kern = (z[None, :] + p[:, None]) / (z[None, :] - p[:, None])
    return 0.5 * quadrature((kern * f[None, :]).T)


def kernel_samples(fb, count, size=4096, degree=6, rng=None):
    """Random grid functions in ``ker Gamma``.

    Random pseudo-polynomials ``Phi`` are projected orthogonally (grid inner
    product) onto ``ker Gamma`` by subtracting ``Gamma^*(X)`` with ``X``
    solving ``Gamma(Gamma^* X) = Gamma(Phi)``.
    """
    rng = np.random.default_rng(rng)
    amb = hermitian_basis(fb.n, real=False)
    cols = np.array([gamma_apply(fb, gamma_adjoint(fb, e, size)) for e in amb])
    mat = _realvec(cols).T
    adj = np.array([gamma_adjoint(fb, e, size).values for e in amb])
    out = []
    m = fb.m
    for _ in range(count):
        c = rng.standard_normal((degree + 1, m, m)) + 1j * rng.standard_normal((degree + 1, m, m))
        c[0] = c[0] + c[0].conj().T
        phi = pseudo_polynomial(c / (degree + 1), size).values
        rhs = _realvec(gamma_apply(fb, phi))
        x = np.linalg.lstsq(mat, rhs, rcond=PINV_CUTOFF)[0]
        out.append(SpectrumGrid(phi - np.tensordot(x, adj, axes=1)))
    return out
