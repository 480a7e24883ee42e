"""Maximum-entropy block-circulant completion (reciprocal processes on Z/NZ).

A stationary process on the discrete circle has a symmetric block-circulant
covariance ``Sigma`` with block ``(i, j) = row[(j - i) mod N]``.  Given the
lags ``row[k] = Sigma_k^T`` for ``k <= n`` the maximum-entropy completion has
a banded inverse whose first block row is
``[M_0, M_1, ..., M_n, 0, ..., 0, M_n^T, ..., M_1^T]``.

The solver minimizes ``tr(K S) - log det(K + Sigma_p^{-1})`` over banded
circulants ``K``.  Circulants are block-diagonalized by the DFT, so every
log-det, inverse and trace costs ``N`` small ``m x m`` operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._newton import logdet_dual
from .core import hermitian_basis, is_pd
from .errors import Infeasible, InputError, MaxIterExceeded, NotPositive

__all__ = [
    "ReciprocalSpec",
    "BlockCirculant",
    "materialize",
    "fft_block_diag",
    "shift_matrix",
    "circulant_complete",
    "reciprocal_params",
    "dual_variables",
    "sample_reciprocal",
]


def _blocks(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None, None]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise InputError(f"expected blocks of shape (k, m, m), got {a.shape}")
    return a


class BlockCirculant:
    """Symmetric block circulant stored by its first block row (real)."""

    def __init__(self, first_block_row, tol=1e-12):
        row = _blocks(first_block_row).copy()
        N = row.shape[0]
        mirror = np.swapaxes(row[(-np.arange(N)) % N], 1, 2)
        scale = max(np.abs(row).max(), 1.0)
        err = np.abs(row - mirror).max()
        if err > tol * scale:
            raise InputError(f"first row violates row[k] = row[N-k]^T (error {err:.3e})")
        row = 0.5 * (row + mirror)
        row.setflags(write=False)
        self.row = row

    @property
    def N(self):
        return self.row.shape[0]

    @property
    def m(self):
        return self.row.shape[1]

    def blocks(self):
        return fft_block_diag(self)

    def inv(self):
        phi = self.blocks()
        return BlockCirculant(np.fft.ifft(np.linalg.inv(phi), axis=0).real)

    def logdet(self):
        w = np.linalg.eigvalsh(self.blocks())
        if np.any(w <= 0):
            raise NotPositive("circulant is not positive definite")
        return float(np.log(w).sum())

    def is_pd(self):
        return bool(np.all(np.linalg.eigvalsh(self.blocks()) > 0))


def materialize(c):
    """Dense ``Nm x Nm`` matrix with block ``(i, j) = row[(j - i) mod N]``."""
    N, m = c.N, c.m
    idx = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
    return c.row[idx].transpose(0, 2, 1, 3).reshape(N * m, N * m)


def fft_block_diag(c):
    """``Phi_k = sum_t row[t] exp(-2 pi i k t / N)``; Hermitian blocks."""
    phi = np.fft.fft(c.row, axis=0)
    return 0.5 * (phi + np.conj(np.swapaxes(phi, 1, 2)))


def shift_matrix(N, m=1):
    """Block cyclic shift ``U`` with ``U e_i = e_{i+1 mod N}``."""
    return np.kron(np.roll(np.eye(N), 1, axis=0), np.eye(m))


@dataclass(frozen=True)
class ReciprocalSpec:
    """Circle length ``N`` and lags ``Sigma_0 .. Sigma_n`` (real ``m x m``)."""

    N: int
    lags: np.ndarray

    def __post_init__(self):
        lags = _blocks(self.lags).copy()
        lags[0] = 0.5 * (lags[0] + lags[0].T)
        N = int(self.N)
        n = lags.shape[0] - 1
        if 2 * (n + 1) > N:
            raise InputError(f"need 2(n+1) <= N, got n={n}, N={N}")
        lags.setflags(write=False)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "lags", lags)
        if not is_pd(self.sigma11()):
            raise NotPositive("Sigma_11 is not positive definite")

    @property
    def m(self):
        return self.lags.shape[1]

    @property
    def n(self):
        return self.lags.shape[0] - 1

    def corner_row(self):
        """``[Sigma_0, Sigma_1^T, ..., Sigma_n^T]``."""
        return np.swapaxes(self.lags, 1, 2)

    def sigma11(self):
        row = self.corner_row()
        k, m = row.shape[0], self.m
        out = np.zeros((k * m, k * m))
        for i in range(k):
            for j in range(k):
                out[i * m:(i + 1) * m, j * m:(j + 1) * m] = row[j - i] if j >= i else row[i - j].T
        return out


def _band_basis(N, m, n):
    """Banded circulant basis (first rows) and the per-element weight ``<E, E>/|entry|``."""
    rows, weights = [], []
    for h in hermitian_basis(m, real=True):
        r = np.zeros((N, m, m))
        r[0] = h
        rows.append(r)
        weights.append(N)
    for k in range(1, n + 1):
        for a in range(m):
            for b in range(m):
                r = np.zeros((N, m, m))
                r[k, a, b] = 1.0
                r[N - k, b, a] = 1.0
                rows.append(r)
                weights.append(2 * N)
    return np.array(rows), np.array(weights, dtype=float)


def circulant_complete(spec, prior=None, tol=1e-8, max_iter=1000, return_info=False):
    """Maximum-entropy circulant completion of ``spec``.

    Parameters
    ----------
    spec : ReciprocalSpec
    prior : BlockCirculant, optional
        Positive-definite prior ``Sigma_p``; the solution then minimizes the
        divergence from it.

    Returns
    -------
    sigma : BlockCirculant
    M : ndarray, shape (n+1, m, m)
        Leading blocks of the first row of ``sigma^{-1}``.
    info : dict, optional
    """
    N, m, n = spec.N, spec.m, spec.n
    rows, wts = _band_basis(N, m, n)
    basis = np.fft.fft(rows, axis=1)
    basis = 0.5 * (basis + np.conj(np.swapaxes(basis, 2, 3)))
    target = np.zeros((N, m, m))
    target[:n + 1] = spec.corner_row()
    for k in range(1, n + 1):
        target[N - k] = spec.lags[k]
    # tr(E S) for circulants = N * sum_t tr(row_E[t] row_S[-t]) = N * sum_t <row_E[t], row_S[t]>
    c = N * np.einsum("itab,tab->i", rows, target)
    if prior is not None:
        if (prior.N, prior.m) != (N, m):
            raise InputError("prior dimensions differ from the specification")
        if not prior.is_pd():
            raise NotPositive("prior is not positive definite")
        offset = np.linalg.inv(prior.blocks())
        x0 = np.zeros(len(rows))
    else:
        offset = None
        s0i = np.linalg.inv(spec.lags[0])
        x0 = np.zeros(len(rows))
        x0[:len(hermitian_basis(m, real=True))] = [
            np.sum(h * s0i) for h in hermitian_basis(m, real=True)]

    def stop(x, g):
        return float(np.max(np.abs(g / wts)))

    res, kh = logdet_dual(basis, c, offset=offset, x0=x0, scale=1.0, tol=tol, max_iter=max_iter,
                          blowup=max(1.0 / tol, 1e10), stop=stop)
    inv_row = np.fft.ifft(kh, axis=0).real
    sigma = BlockCirculant(np.fft.ifft(np.linalg.inv(kh), axis=0).real, tol=1e-9)
    if res.status == "diverged":
        raise Infeasible("dual diverged: no positive-definite circulant completion", best=sigma)
    if not res.converged:
        raise MaxIterExceeded(f"dual stopped ({res.status}) with residual {res.history[-1]:.3e}",
                              best=sigma)
    inv_row = 0.5 * (inv_row + np.swapaxes(inv_row[(-np.arange(N)) % N], 1, 2))
    M = inv_row[:n + 1].copy()
    if not return_info:
        return sigma, M
    corner = sigma.row[:n + 1]
    cr = spec.corner_row()
    k_row = np.tensordot(res.x, rows, axes=1)
    info = {
        "iterations": res.iterations,
        "constraint_residual": float(np.linalg.norm(corner - cr) / np.linalg.norm(cr)),
        "inverse_row": inv_row,
        "K_row": k_row,
    }
    return sigma, M, info


def reciprocal_params(row, n, tol=1e-8):
    """Extract ``M_0 .. M_n`` from the first block row of ``Sigma_c^{-1}``.

    Raises
    ------
    InputError
        An interior block (lags ``n+1 .. N-n-1``) exceeds ``tol * |M_0|``.
    """
    row = _blocks(row)
    N = row.shape[0]
    interior = row[n + 1:N - n]
    if interior.size:
        worst = float(np.abs(interior).max())
        if worst > tol * max(np.linalg.norm(row[0]), 1e-300):
            raise InputError(f"band violation: interior block magnitude {worst:.3e}")
    M = row[:n + 1].copy()
    M[0] = 0.5 * (M[0] + M[0].T)
    return M


def dual_variables(k_row, n):
    """``(Lambda, Theta)`` with ``K = E Lambda E^T + U Theta U^T - Theta``.

    ``K`` is the banded circulant with first row ``k_row``.  ``Lambda``
    spreads each lag evenly over the corner; ``Theta`` absorbs the
    non-circulant remainder and is orthogonal to all circulants.
    """
    k_row = _blocks(k_row)
    N, m = k_row.shape[0], k_row.shape[1]
    p = n + 1
    lam = np.zeros((p * m, p * m))
    for i in range(p):
        for j in range(p):
            d = j - i
            blk = k_row[d] if d >= 0 else k_row[N + d]
            lam[i * m:(i + 1) * m, j * m:(j + 1) * m] = N * blk / (p - abs(d))
    K = materialize(BlockCirculant(k_row, tol=1e-9))
    D = K.copy()
    D[:p * m, :p * m] -= lam
    Db = D.reshape(N, m, N, m).transpose(0, 2, 1, 3)
    th = np.zeros_like(Db)
    # (U Theta U^T)_{i+1, j+1} = Theta_{i, j}, so Theta_{i+1,j+1} = Theta_{i,j} - D_{i+1,j+1}.
    for d in range(N):
        for t in range(N - 1):
            th[t + 1, (d + t + 1) % N] = th[t, (d + t) % N] - Db[t + 1, (d + t + 1) % N]
    theta = th.transpose(0, 2, 1, 3).reshape(N * m, N * m)
    theta = 0.5 * (theta + theta.T)
    # Remove the circulant component (gauge).
    tb = theta.reshape(N, m, N, m).transpose(0, 2, 1, 3)
    mean_row = np.array([np.mean([tb[i, (i + k) % N] for i in range(N)], axis=0) for k in range(N)])
    theta = theta - materialize(BlockCirculant(mean_row, tol=1e-8))
    return lam, theta


def sample_reciprocal(sigma, count, seed=None):
    """Zero-mean Gaussian draws with covariance ``sigma`` (shape ``(count, N, m)``)."""
    phi = sigma.blocks()
    w = np.linalg.eigvalsh(phi)
    if np.any(w <= 0):
        raise NotPositive("covariance is not positive definite")
    L = np.linalg.cholesky(phi)
    rng = np.random.default_rng(seed)
    N, m = sigma.N, sigma.m
    xi = (rng.standard_normal((count, N, m)) + 1j * rng.standard_normal((count, N, m))) / np.sqrt(2)
    z = np.fft.fft(np.einsum("kab,ckb->cka", L, xi), axis=1) / np.sqrt(N)
    return np.sqrt(2.0) * z.real
