"""Damped Newton minimization with Armijo backtracking on an open convex domain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SHRINK = 0.5
SLOPE = 1e-4


@dataclass
class NewtonResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    status: str = ""


def newton_minimize(oracle, x0, tol, max_iter, stop=None, blowup=None):
    """Minimize a smooth convex function.

    Parameters
    ----------
    oracle : callable
        ``oracle(x, hess)`` returns ``(f, g, H)`` (``H`` may be ``None`` when
        ``hess`` is false) or ``None`` if ``x`` is outside the domain.
    x0 : ndarray
        Starting point inside the domain.
    tol : float
        Stopping threshold applied to ``stop(x, g)`` (default ``max|g|``).
    blowup : float, optional
        ``status='diverged'`` once ``f < -blowup`` or ``|x| > blowup``.

    Returns
    -------
    NewtonResult
        ``status`` is one of ``'converged'``, ``'max_iter'``, ``'stalled'``,
        ``'diverged'``.
    """
    if stop is None:
        def stop(x, g):
            return float(np.max(np.abs(g))) if g.size else 0.0

    x = np.asarray(x0, dtype=float).copy()
    out = oracle(x, True)
    if out is None:
        raise ValueError("starting point outside the domain")
    f, g, H = out
    history = [stop(x, g)]
    for it in range(max_iter + 1):
        if history[-1] <= tol:
            return _polish(oracle, NewtonResult(x, f, g, it, True, history, "converged"), H, stop)
        if it == max_iter:
            break
        if blowup is not None and (f < -blowup or np.linalg.norm(x) > blowup):
            return NewtonResult(x, f, g, it, False, history, "diverged")
        if not np.all(np.isfinite(H)) or not np.all(np.isfinite(g)):
            return NewtonResult(x, f, g, it, False, history, "diverged")
        try:
            L = np.linalg.cholesky(H)
            dx = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(H, g, rcond=1e-12)[0]
        slope = float(g @ dx)
        if not np.isfinite(slope):
            return NewtonResult(x, f, g, it, False, history, "diverged")
        if slope >= 0:
            dx = -g
            slope = -float(g @ g)
        t = 1.0
        slack = 64 * np.finfo(float).eps * max(1.0, abs(f))
        while True:
            xn = x + t * dx
            trial = oracle(xn, True)
            if trial is not None and trial[0] <= f + SLOPE * t * slope + slack:
                break
            t *= SHRINK
            if t < 1e-16:
                return NewtonResult(x, f, g, it, False, history, "stalled")
        x = xn
        f, g, H = trial
        history.append(stop(x, g))
    return NewtonResult(x, f, g, max_iter, False, history, "max_iter")


def _polish(oracle, res, H, stop):
    # One extra full Newton step, kept only if it lowers the stopping measure.
    try:
        dx = -np.linalg.solve(H, res.grad)
    except np.linalg.LinAlgError:
        return res
    out = oracle(res.x + dx, True)
    if out is None:
        return res
    val = stop(res.x + dx, out[1])
    if np.isfinite(val) and val < res.history[-1] and out[0] <= res.f + 1e-12 * max(1.0, abs(res.f)):
        res.x = res.x + dx
        res.f, res.grad = out[0], out[1]
        res.history.append(val)
    return res


def logdet_dual(basis, c, offset=None, x0=None, scale=1.0, tol=1e-10, max_iter=200,
                blowup=None, stop=None):
    """Minimize ``c.x - scale * sum_g log det(offset_g + sum_i x_i basis_i,g)``.

    This single convex program is the dual of every log-det entropy problem in
    the package: ``g`` runs over frequency-grid points (``scale = 1/G``), over
    Fourier blocks of a circulant (``scale = 1``) or over one matrix.

    Parameters
    ----------
    basis : ndarray, shape (d, G, m, m)
        Hermitian basis functions.
    c : ndarray, shape (d,)
        Linear term; at the optimum ``c_i = scale * sum_g tr(basis_i,g Q_g^{-1})``.
    offset : ndarray, shape (G, m, m), optional

    Returns
    -------
    result : NewtonResult
    q : ndarray
        ``offset + sum x_i basis_i`` at the returned point.
    """
    basis = np.asarray(basis)
    d, size, m, _ = basis.shape
    c = np.asarray(c, dtype=float)
    off = np.zeros((size, m, m), dtype=basis.dtype) if offset is None else np.asarray(offset)
    if x0 is None:
        x0 = np.zeros(d)

    def assemble(x):
        return off + np.tensordot(x, basis, axes=1)

    def oracle(x, hess):
        q = assemble(x)
        try:
            L = np.linalg.cholesky(q)
        except np.linalg.LinAlgError:
            return None
        diag = np.abs(np.diagonal(L, axis1=1, axis2=2))
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            return None
        ld = 2.0 * np.log(diag).sum()
        qinv = np.linalg.inv(q)
        w = np.matmul(qinv[None], basis)
        g = c - scale * np.real(np.trace(w, axis1=2, axis2=3)).sum(axis=1)
        f = float(c @ x - scale * ld)
        H = None
        if hess:
            wf = w.reshape(d, size * m * m)
            wt = np.swapaxes(w, 2, 3).reshape(d, size * m * m)
            H = scale * np.real(wf @ wt.T)
            H = 0.5 * (H + H.T)
        return f, g, H

    res = newton_minimize(oracle, x0, tol, max_iter, stop=stop, blowup=blowup)
    return res, assemble(res.x)
