"""Burg maximum-entropy extension of a (block) covariance sequence.

Given lags ``C_0 .. C_{n-1}`` with ``C_k = E[y(t+k) y(t)^*]`` the extension
``Phi_c`` has the prescribed Fourier coefficients and ``Phi_c^{-1}`` is a
pseudo-polynomial ``Q = sum_{|k|<n} A_k e^{-j theta k}``.  When some lags are
missing the corresponding ``A_k`` vanish.

Complete scalar sequences go through Levinson-Durbin, complete block
sequences through the Whittle-Wiggins-Robinson recursion and sequences with
gaps through Newton's method on the log-det dual over the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._newton import logdet_dual
from .core import (SpectrumGrid, _check_grid_size, _is_real, fourier_coeff, frequency_grid,
                   hermitian_basis, is_pd, pseudo_polynomial, quadrature)
from .errors import DualDiverged, InputError, MaxIterExceeded, NotPositive

__all__ = [
    "CovSequence",
    "ARModel",
    "toeplitz",
    "levinson_durbin",
    "whittle",
    "burg_extend",
    "entropy_rate",
    "szego_check",
    "spectral_factor",
]


def _as_blocks(c):
    c = np.asarray(c)
    if c.ndim == 1:
        c = c[:, None, None]
    if c.ndim != 3 or c.shape[1] != c.shape[2]:
        raise InputError(f"lags must have shape (n, m, m), got {c.shape}")
    return c


def _ct(a):
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class CovSequence:
    """Lags ``C_0 .. C_{n-1}``; ``missing`` lists unavailable lag indices."""

    lags: np.ndarray
    missing: frozenset = frozenset()

    def __post_init__(self):
        c = _as_blocks(self.lags)
        c = c.astype(complex) if np.iscomplexobj(c) else c.astype(float)
        if c.shape[0] < 1:
            raise InputError("at least C_0 is required")
        c = c.copy()
        c[0] = 0.5 * (c[0] + _ct(c[0]))
        miss = frozenset(int(k) for k in self.missing)
        if any(k < 1 or k >= c.shape[0] for k in miss):
            raise InputError(f"missing lags must lie in 1..{c.shape[0] - 1}")
        if not is_pd(c[0]):
            raise NotPositive("C_0 is not positive definite")
        c[list(miss)] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "lags", c)
        object.__setattr__(self, "missing", miss)

    @property
    def m(self):
        return self.lags.shape[1]

    @property
    def order(self):
        return self.lags.shape[0]

    def available(self):
        return [k for k in range(self.order) if k not in self.missing]


def toeplitz(c):
    """Block-Toeplitz ``Sigma_n`` with block ``(i, j) = C_{j-i}`` and ``C_{-k} = C_k^*``."""
    if not isinstance(c, CovSequence):
        c = CovSequence(c)
    if c.missing:
        raise InputError("cannot assemble Sigma_n with missing lags")
    n, m = c.order, c.m
    out = np.zeros((n * m, n * m), dtype=c.lags.dtype)
    for i in range(n):
        for j in range(n):
            blk = c.lags[j - i] if j >= i else _ct(c.lags[i - j])
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = blk
    return out


def levinson_durbin(r):
    """Scalar Levinson-Durbin recursion.

    Parameters
    ----------
    r : array_like
        Autocovariances ``r_0 .. r_p``.

    Returns
    -------
    a : ndarray
        Predictor coefficients, ``y_t = sum_k a_k y_{t-k} + e_t``.
    v : float
        Innovation variance.
    """
    r = np.asarray(r)
    p = len(r) - 1
    a = np.zeros(p, dtype=r.dtype)
    v = float(np.real(r[0]))
    for k in range(p):
        acc = r[k + 1] - np.dot(a[:k], r[k:0:-1])
        kappa = acc / v
        a[:k] = a[:k] - kappa * np.conj(a[:k][::-1])
        a[k] = kappa
        v = v * (1.0 - abs(kappa) ** 2)
        if v <= 0:
            raise NotPositive("Toeplitz matrix is not positive definite")
    return a, v


def whittle(c):
    """Whittle-Wiggins-Robinson multichannel recursion.

    Parameters
    ----------
    c : ndarray, shape (n, m, m)
        Lags ``C_0 .. C_{n-1}``.

    Returns
    -------
    a : ndarray, shape (n-1, m, m)
        Forward predictor, ``y_t = sum_k a_k y_{t-k} + e_t``.
    rf : ndarray, shape (m, m)
        Forward innovation covariance.
    """
    c = _as_blocks(c)
    n, m = c.shape[0], c.shape[1]
    a = np.zeros((0, m, m), dtype=c.dtype)
    b = np.zeros((0, m, m), dtype=c.dtype)
    vf = c[0].copy()
    vb = c[0].copy()
    for p in range(n - 1):
        delta = c[p + 1] - sum((a[k] @ c[p - k] for k in range(p)), np.zeros((m, m), dtype=c.dtype))
        kf = delta @ np.linalg.inv(vb)
        kb = _ct(delta) @ np.linalg.inv(vf)
        a_new = np.concatenate([a - kf @ b[::-1], kf[None]]) if p else kf[None]
        b_new = np.concatenate([b - kb @ a[::-1], kb[None]]) if p else kb[None]
        vf = vf - kf @ _ct(delta)
        vb = vb - kb @ delta
        vf = 0.5 * (vf + _ct(vf))
        vb = 0.5 * (vb + _ct(vb))
        if not (is_pd(vf) and is_pd(vb)):
            raise NotPositive("block-Toeplitz matrix is not positive definite")
        a, b = a_new, b_new
    return a, vf


def _inverse_coeffs(a, r):
    """``A_d = sum_k alpha_k^* R^{-1} alpha_{k+d}`` with ``alpha_0 = I``, ``alpha_k = -a_k``."""
    m = r.shape[0]
    alpha = np.concatenate([np.eye(m)[None], -a]) if len(a) else np.eye(m)[None]
    ri = np.linalg.inv(r)
    n = alpha.shape[0]
    out = np.zeros((n, m, m), dtype=np.result_type(alpha, ri))
    for d in range(n):
        for k in range(n - d):
            out[d] += _ct(alpha[k]) @ ri @ alpha[k + d]
    out[0] = 0.5 * (out[0] + _ct(out[0]))
    return out


@dataclass(frozen=True)
class ARModel:
    """Pseudo-polynomial ``Q = Phi^{-1}`` with coefficients ``A_0 .. A_{n-1}``.

    ``a`` and ``R`` give the predictor form ``y_t = sum a_k y_{t-k} + e_t``,
    ``E[e e^*] = R``.
    """

    A: np.ndarray
    a: np.ndarray
    R: np.ndarray

    @property
    def m(self):
        return self.A.shape[1]

    @property
    def order(self):
        return self.A.shape[0]

    def inverse_spectrum(self, size):
        return pseudo_polynomial(self.A, size)

    def spectrum(self, size):
        return self.inverse_spectrum(size).inv()


def _check_coercive(A, size):
    q = pseudo_polynomial(A, size)
    lo = q.min_eig()
    if not lo > 1e-10 * np.linalg.norm(A[0], 2):
        raise DualDiverged(f"Phi^-1 is not coercive on the grid (min eigenvalue {lo:.3e})")
    return q


def spectral_factor(A, size=4096):
    """Predictor form ``(a, R)`` of the pseudo-polynomial with coefficients ``A``.

    Scalar case: FFT cepstral factorization of ``Q`` on the grid.  Block
    case: the spectrum ``Q^{-1}`` is autoregressive of order ``n-1``, so the
    Whittle recursion on its grid Fourier coefficients returns the factor.
    """
    A = _as_blocks(A)
    n, m = A.shape[0], A.shape[1]
    if n == 1:
        return np.zeros((0, m, m)), np.linalg.inv(A[0])
    q = pseudo_polynomial(A, size)
    if m == 1:
        logq = np.log(q.scalar())
        # Fourier coefficients of log Q on the grid theta_k = -pi + 2 pi k/G.
        ceps = np.fft.ifft(np.fft.ifftshift(logq))
        half = np.zeros(size, dtype=complex)
        half[1:size // 2] = ceps[1:size // 2]
        alpha_grid = np.exp(np.fft.fft(half))
        alpha = np.fft.ifft(alpha_grid)[:n]
        r = np.exp(-ceps[0].real)
        alpha = alpha / alpha[0]
        a = -alpha[1:]
        if _is_real(A):
            a = a.real
        return a.reshape(n - 1, 1, 1), np.array([[r]])
    phi = q.inv()
    c = np.array([fourier_coeff(phi, k) for k in range(n)])
    if _is_real(A):
        c = c.real
    a, r = whittle(c)
    return a, r


def _pp_basis(m, lags, real, size):
    """Grid basis of pseudo-polynomials supported on ``lags`` (0 included)."""
    theta = frequency_grid(size)
    out = []
    for h in hermitian_basis(m, real=real) if 0 in lags else []:
        out.append(np.broadcast_to(h, (size, m, m)))
    units = []
    for i in range(m):
        for j in range(m):
            e = np.zeros((m, m), dtype=complex)
            e[i, j] = 1.0
            units.append(e)
            if not real:
                units.append(1j * e)
    for k in lags:
        if k == 0:
            continue
        ph = np.exp(-1j * theta * k)[:, None, None]
        for e in units:
            out.append(e * ph + _ct(e) * np.conj(ph))
    return np.array(out, dtype=complex)


def _dual_extend(c, size, tol, max_iter):
    m = c.m
    real = _is_real(c.lags)
    lags = c.available()
    basis = _pp_basis(m, lags, real, size)
    target = pseudo_polynomial(c.lags, size).values
    cvec = np.real(np.einsum("igab,gba->i", basis, target)) / size
    q0 = np.broadcast_to(np.linalg.inv(c.lags[0]), (size, m, m))
    flat = basis.reshape(len(basis), -1)
    x0 = np.linalg.lstsq(np.concatenate([flat.real, flat.imag], 1).T,
                         np.concatenate([q0.ravel().real, q0.ravel().imag]), rcond=None)[0]
    res, q = logdet_dual(basis, cvec, x0=x0, scale=1.0 / size, tol=tol, max_iter=max_iter,
                         blowup=max(1.0 / tol, 1e10))
    if res.status == "diverged":
        raise DualDiverged("missing-lag dual is unbounded: no coercive extension found")
    grid = SpectrumGrid(q)
    A = np.array([fourier_coeff(grid, k) for k in range(c.order)])
    A[list(c.missing)] = 0.0
    if real:
        A = A.real
    if not res.converged:
        raise MaxIterExceeded(
            f"missing-lag dual stopped ({res.status}) with gradient {res.history[-1]:.3e}",
            best=A)
    return A, res


def burg_extend(c, grid_size=4096, tol=1e-10, max_iter=200, method="auto", return_info=False):
    """Maximum-entropy extension of a covariance sequence.

    Parameters
    ----------
    c : CovSequence or array_like
    grid_size : int
    method : {'auto', 'recursion', 'dual'}
        ``'auto'`` uses the recursions when no lag is missing.

    Returns
    -------
    model : ARModel
    phi : SpectrumGrid
        ``Q^{-1}`` on the grid.
    info : dict, optional
    """
    if not isinstance(c, CovSequence):
        c = CovSequence(c)
    _check_grid_size(grid_size)
    if c.order >= grid_size / 4:
        raise InputError(f"order {c.order} too large for grid {grid_size}")
    if method not in ("auto", "recursion", "dual"):
        raise InputError(f"unknown method {method!r}")
    if c.missing and method == "recursion":
        raise InputError("recursions need every lag")
    iterations = 0
    if method == "dual" or c.missing:
        A, res = _dual_extend(c, grid_size, tol, max_iter)
        iterations = res.iterations
        a, r = spectral_factor(A, grid_size)
    else:
        if not is_pd(toeplitz(c)):
            raise NotPositive("block-Toeplitz matrix Sigma_n is not positive definite")
        if c.m == 1:
            a, v = levinson_durbin(c.lags[:, 0, 0])
            a, r = a.reshape(-1, 1, 1), np.array([[v]])
        else:
            a, r = whittle(c.lags)
        A = _inverse_coeffs(a, r)
        if _is_real(c.lags):
            A = A.real
    q = _check_coercive(A, grid_size)
    model = ARModel(A, a, r)
    phi = q.inv()
    if not return_info:
        return model, phi
    err = max(np.max(np.abs(fourier_coeff(phi, k) - c.lags[k])) for k in c.available())
    return model, phi, {"iterations": iterations, "constraint_residual": float(err)}


def _logdet_grid(phi):
    w = np.linalg.eigvalsh(phi.values)
    if not np.all(w > 0):
        raise NotPositive("spectrum is not coercive on the grid")
    return np.log(w).sum(axis=1)


def entropy_rate(phi):
    """Kolmogorov entropy rate ``(m/2) log(2 pi e) + (1/4pi) int log det Phi``."""
    ld = _logdet_grid(phi)
    return 0.5 * phi.m * np.log(2 * np.pi * np.e) + 0.5 * float(quadrature(ld))


def szego_check(phi):
    """``det R = exp{(1/2pi) int log det Phi}``."""
    return float(np.exp(quadrature(_logdet_grid(phi))))
