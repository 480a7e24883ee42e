"""Solver-independent certificates.

:func:`certify` takes a problem description and a candidate solution (plain
JSON-style dicts, the same documents the CLI reads and writes) and
recomputes

* ``constraint_residual``: how far the candidate is from the feasible set;
* ``orthogonality_residual``: the normalized component of the entropy
  gradient along ``V``, which vanishes exactly at the optimum.

Nothing here calls a solver.
"""

from __future__ import annotations

import numpy as np

from . import circulant as circ
from .burg import CovSequence, entropy_rate, _pp_basis
from .core import (AffineProblem, SpectrumGrid, SubspaceBasis, fourier_coeff, hermitian_basis,
                   orthogonality_residual, pseudo_polynomial, quadrature,
                   spectral_orthogonality_residual)
from .dempster import PartialCov, Pattern, free_basis, gaussian_entropy
from .errors import InputError
from .io import lags_from_json, matrix_from_json
from .moment import FilterBank, gamma_adjoint, gamma_apply, pick_to_problem, range_basis, range_residual
from .prior import divergence, itakura_saito_rate

__all__ = ["certify", "FAMILIES", "parse_partial", "parse_grid", "grid_to_json",
           "parse_complex_list"]

FAMILIES = ("dempster", "matrix_prior", "burg", "moment", "pick", "covapprox", "is", "kl",
            "circulant", "gibbs", "bridge")


def parse_partial(obj):
    """``{"n": n, "entries": [{"i":, "j":, "v":}, ...]}`` with 1-based indices."""
    try:
        n = int(obj["n"])
        vals = {}
        for k, e in enumerate(obj["entries"]):
            i, j, v = int(e["i"]) - 1, int(e["j"]) - 1, float(e["v"])
            vals[(min(i, j), max(i, j))] = v
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"partial covariance: malformed field ({exc})") from None
    return PartialCov(Pattern(n, frozenset(vals)), vals)


def parse_complex_list(obj, where="values"):
    if isinstance(obj, dict):
        re = np.asarray(obj.get("re", []), dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise InputError(f"{where}: 're' and 'im' differ in length")
        return re + 1j * im
    try:
        return np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}: expected a list of numbers or {{'re', 'im'}}") from None


def grid_to_json(phi):
    out = {"grid": phi.size, "m": phi.m, "re": phi.values.real.tolist()}
    if np.any(phi.values.imag):
        out["im"] = phi.values.imag.tolist()
    return out


def parse_grid(obj, where="spectrum"):
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float) if "im" in obj else 0.0
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: malformed spectrum ({exc})") from None
    return SpectrumGrid(re + 1j * im)


def _bank(problem):
    return FilterBank(matrix_from_json(problem["A"], "A"), matrix_from_json(problem["B"], "B"))


def _adjoint_grids(fb, size):
    return [gamma_adjoint(fb, e, size) for e in hermitian_basis(fb.n)]


def _moment_resid(fb, phi, sigma):
    return float(np.linalg.norm(gamma_apply(fb, phi) - sigma) / np.linalg.norm(sigma))


def _cert(constraint, orth, objective, extra=None):
    out = {"constraint_residual": float(constraint),
           "orthogonality_residual": float(orth),
           "objective_value": float(objective)}
    if extra:
        out.update(extra)
    return out


def _dempster(problem, sol):
    p = parse_partial(problem)
    sigma = matrix_from_json(sol["sigma"], "sigma").real
    return _cert(p.constraint_residual(sigma),
                 orthogonality_residual(np.linalg.inv(sigma), free_basis(p.pattern)),
                 gaussian_entropy(sigma))


def _matrix_prior(problem, sol):
    N = matrix_from_json(problem["N"], "N")
    basis = [matrix_from_json(b, "basis") for b in problem.get("basis", [])]
    off = matrix_from_json(problem["offset"], "offset")
    ap = AffineProblem(off, SubspaceBasis(basis, n=off.shape[0]))
    M = matrix_from_json(sol["M"], "M")
    return _cert(ap.distance(M) / max(np.linalg.norm(M), 1e-300),
                 orthogonality_residual(np.linalg.inv(M) - np.linalg.inv(N), ap.basis),
                 divergence(M, N))


def _burg(problem, sol):
    lags = lags_from_json(problem["lags"])
    c = CovSequence(lags, frozenset(problem.get("missing", [])))
    size = int(problem.get("grid", 4096))
    A = lags_from_json(sol["A"], "A")
    q = pseudo_polynomial(A, size)
    if not q.is_coercive():
        return _cert(np.inf, np.inf, np.nan)
    phi = q.inv()
    scale = np.linalg.norm(c.lags[0])
    cons = max(np.linalg.norm(fourier_coeff(phi, k) - c.lags[k]) for k in c.available()) / scale
    basis = _pp_basis(c.m, c.available(), False, size)
    return _cert(cons, spectral_orthogonality_residual(q, basis), entropy_rate(phi))


def _moment(problem, sol, fb=None, sigma=None):
    if fb is None:
        fb = _bank(problem)
        sigma = matrix_from_json(problem["sigma"], "sigma")
    size = int(problem.get("grid", 4096))
    lam = matrix_from_json(sol["Lambda"], "Lambda")
    q = gamma_adjoint(fb, lam, size)
    if not q.is_coercive():
        return _cert(np.inf, np.inf, np.nan)
    phi = q.inv()
    ld = np.log(np.linalg.eigvalsh(phi.values)).sum(axis=1)
    return _cert(_moment_resid(fb, phi, sigma),
                 spectral_orthogonality_residual(q, _adjoint_grids(fb, size)),
                 float(quadrature(ld)))


def _pick(problem, sol):
    p = parse_complex_list(problem["points"], "points")
    w = parse_complex_list(problem["values"], "values")
    fb, sigma = pick_to_problem(p, w)
    return _moment(problem, sol, fb, sigma)


def _covapprox(problem, sol):
    fb = _bank(problem)
    sh = matrix_from_json(problem["sigma_hat"], "sigma_hat")
    sc = matrix_from_json(sol["sigma"], "sigma")
    rb = range_basis(fb, real=fb.is_real and not np.iscomplexobj(sh))
    return _cert(range_residual(fb, sc),
                 orthogonality_residual(np.linalg.inv(sc) - np.linalg.inv(sh), SubspaceBasis(rb)),
                 divergence(sc, sh))


def _spectral_prior(problem, sol, kind):
    fb = _bank(problem)
    sigma = matrix_from_json(problem["sigma"], "sigma")
    psi = parse_grid(problem["prior"], "prior")
    lam = matrix_from_json(sol["Lambda"], "Lambda")
    q = gamma_adjoint(fb, lam, psi.size)
    grids = _adjoint_grids(fb, psi.size)
    if kind == "is":
        qi = psi.inv() + q
        if not qi.is_coercive():
            return _cert(np.inf, np.inf, np.nan)
        phi = qi.inv()
        grad = phi.inv() - psi.inv()
        obj = itakura_saito_rate(psi, phi)
    else:
        if q.min_eig() <= 0:
            return _cert(np.inf, np.inf, np.nan)
        w = psi.scalar()
        phi = SpectrumGrid(w / q.scalar())
        grad = SpectrumGrid(-w / phi.scalar())
        obj = float(quadrature(w * np.log(w / phi.scalar())))
    return _cert(_moment_resid(fb, phi, sigma), spectral_orthogonality_residual(grad, grids), obj)


def _circulant(problem, sol):
    N = int(problem["N"])
    spec = circ.ReciprocalSpec(N, lags_from_json(problem["lags"]).real)
    sigma = circ.BlockCirculant(lags_from_json(sol["row"], "row").real, tol=1e-8)
    if sigma.N != N or sigma.m != spec.m:
        raise InputError("solution row does not match the problem dimensions")
    if not sigma.is_pd():
        return _cert(np.inf, np.inf, np.nan)
    inv_row = sigma.inv().row
    if problem.get("prior") is not None:
        prior = circ.BlockCirculant(lags_from_json(problem["prior"], "prior").real)
        inv_row = inv_row - prior.inv().row
        obj = divergence(circ.materialize(sigma), circ.materialize(prior))
    else:
        obj = sigma.logdet()
    n = spec.n
    cr = spec.corner_row()
    cons = np.linalg.norm(sigma.row[:n + 1] - cr) / np.linalg.norm(cr)
    # V = symmetric circulants supported on the free lags n+1 .. N-n-1.
    total = np.sum(inv_row ** 2)
    free = np.sum(inv_row[n + 1:N - n] ** 2)
    orth = float(np.sqrt(free / total)) if total > 0 else 0.0
    return _cert(cons, orth, obj)


def _gibbs(problem, sol):
    L = np.atleast_2d(np.asarray(problem["features"], dtype=float))
    c = np.atleast_1d(np.asarray(problem["target"], dtype=float))
    K = L.shape[1] if L.size else len(sol["p"])
    L = L.reshape(-1, K)
    mu = np.asarray(problem.get("mu") or np.ones(K), dtype=float)
    p = np.asarray(sol["p"], dtype=float)
    cons = abs(np.dot(p, mu) - 1.0) + (np.linalg.norm(L @ (p * mu) - c) if len(c) else 0.0)
    if np.any(p <= 0):
        return _cert(cons, np.inf, np.nan)
    grad = -1.0 - np.log(p)
    span = np.vstack([np.ones(K), L]) * np.sqrt(mu)
    g = grad * np.sqrt(mu)
    coef = np.linalg.lstsq(span.T, g, rcond=None)[0]
    orth = np.linalg.norm(g - span.T @ coef) / np.linalg.norm(g)
    ent = -float(np.sum(p * np.log(p) * mu))
    return _cert(cons, orth, ent)


def _bridge(problem, sol):
    P = np.asarray(problem["P"], dtype=float)
    r0 = np.asarray(problem["rho0"], dtype=float)
    r1 = np.asarray(problem["rho1"], dtype=float)
    q = np.asarray(sol["q"], dtype=float)
    cons = np.abs(q.sum(axis=1) - r0).sum() + np.abs(q.sum(axis=0) - r1).sum()
    K = len(r0)
    mask = q > 0
    if np.any(q < 0):
        return _cert(cons, np.inf, np.nan)
    grad = np.log(q[mask] / P[mask]) + 1.0
    # V^perp = {a_i + b_j}, restricted to the support of q.
    rows, cols = np.nonzero(mask)
    design = np.zeros((rows.size, 2 * K))
    design[np.arange(rows.size), rows] = 1.0
    design[np.arange(rows.size), K + cols] = 1.0
    coef = np.linalg.lstsq(design, grad, rcond=None)[0]
    orth = np.linalg.norm(grad - design @ coef) / np.linalg.norm(grad)
    obj = float(np.sum(q[mask] * np.log(q[mask] / P[mask])))
    return _cert(cons, orth, obj)


_DISPATCH = {
    "dempster": _dempster,
    "matrix_prior": _matrix_prior,
    "burg": _burg,
    "moment": _moment,
    "pick": _pick,
    "covapprox": _covapprox,
    "is": lambda p, s: _spectral_prior(p, s, "is"),
    "kl": lambda p, s: _spectral_prior(p, s, "kl"),
    "circulant": _circulant,
    "gibbs": _gibbs,
    "bridge": _bridge,
}


def certify(problem, solution, tol=None):
    """Recompute the certificate of ``solution`` for ``problem``.

    ``problem["family"]`` selects the entropy functional.  When ``tol`` is
    given the result also carries ``converged`` (both residuals at most
    ``tol``).
    """
    family = problem.get("family")
    if family not in _DISPATCH:
        raise InputError(f"unknown problem type {family!r}; expected one of {', '.join(FAMILIES)}")
    try:
        cert = _DISPATCH[family](problem, solution)
    except KeyError as exc:
        raise InputError(f"{family}: missing field {exc}") from None
    if tol is not None:
        cert["converged"] = bool(cert["constraint_residual"] <= tol
                                 and cert["orthogonality_residual"] <= tol)
    return cert
