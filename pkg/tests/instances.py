"""Random feasible instances for every solver family.

Each builder returns ``(problem, solution)`` as the JSON-style documents
read by :func:`maxent.check.certify`.
"""

import numpy as np

from maxent import bridge, burg, circulant, dempster, gibbs, moment, prior
from maxent.check import grid_to_json
from maxent.core import AffineProblem, SpectrumGrid, fourier_coeff
from maxent.io import lags_to_json, matrix_to_json

GRID = 4096


def random_pd(rng, n, cond=20.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.exp(rng.uniform(0, np.log(cond), n))
    return (q * w) @ q.T


def random_spectrum(rng, m, order=3, size=GRID):
    """Coercive ``m x m`` spectrum ``H H^* + 0.2 I`` from a random FIR ``H``."""
    h = 0.5 * rng.standard_normal((order + 1, m, m))
    theta = -np.pi + 2 * np.pi * np.arange(size) / size
    H = np.tensordot(np.exp(-1j * np.outer(theta, np.arange(order + 1))), h, axes=1)
    return SpectrumGrid(H @ np.conj(np.swapaxes(H, 1, 2)) + 0.2 * np.eye(m))


def random_lags(rng, m, n):
    phi = random_spectrum(rng, m)
    lags = np.array([fourier_coeff(phi, k) for k in range(n + 1)])
    return lags.real


def random_bank(rng, n, m=1):
    """Stable real ``(A, B)`` with reachable pair."""
    A = rng.standard_normal((n, n))
    A *= rng.uniform(0.3, 0.8) / max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((n, m))
    return moment.FilterBank(A, B)


def bank_json(fb):
    return {"A": matrix_to_json(fb.A), "B": matrix_to_json(fb.B)}


def random_pattern(rng, n, density=0.5):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return dempster.Pattern(n, frozenset([(i, i) for i in range(n)] + pairs))


def partial_json(p):
    return {"n": p.pattern.n,
            "entries": [{"i": i + 1, "j": j + 1, "v": float(v)} for (i, j), v in p.values.items()]}


# --- builders -------------------------------------------------------------------


def dempster_instance(rng, n=None):
    n = n or int(rng.integers(3, 9))
    p = dempster.PartialCov.from_matrix(random_pd(rng, n), random_pattern(rng, n))
    sigma = dempster.complete(p)
    return dict(partial_json(p), family="dempster"), {"sigma": matrix_to_json(sigma)}


def matrix_prior_instance(rng, n=None):
    n = n or int(rng.integers(3, 9))
    p = dempster.PartialCov.from_matrix(random_pd(rng, n), random_pattern(rng, n))
    basis = dempster.free_basis(p.pattern)
    N = random_pd(rng, n)
    M = prior.matrix_prior_solve(N, AffineProblem(p.matrix(), basis))
    problem = {"family": "matrix_prior", "N": matrix_to_json(N),
               "offset": matrix_to_json(p.matrix()),
               "basis": [matrix_to_json(b) for b in basis.elements]}
    return problem, {"M": matrix_to_json(M)}


def burg_instance(rng, m=None, n=None, missing=()):
    m = m or int(rng.integers(1, 3))
    n = n or int(rng.integers(1, 9 if m == 1 else 5))
    lags = random_lags(rng, m, n)
    c = burg.CovSequence(lags, frozenset(missing))
    model, _ = burg.burg_extend(c, GRID)
    problem = {"family": "burg", "lags": lags_to_json(lags), "missing": list(missing),
               "grid": GRID}
    return problem, {"A": lags_to_json(model.A)}


def moment_instance(rng, n=None, m=1):
    n = n or int(rng.integers(2, 7))
    fb = random_bank(rng, n, m)
    sigma = moment.gamma_apply(fb, random_spectrum(rng, m)).real
    _, lam = moment.maxent_spectrum(fb, sigma, GRID)
    problem = dict(bank_json(fb), family="moment", sigma=matrix_to_json(sigma), grid=GRID)
    return problem, {"Lambda": matrix_to_json(lam)}


def covapprox_instance(rng, n=None):
    n = n or int(rng.integers(2, 7))
    fb = random_bank(rng, n)
    sh = random_pd(rng, n)
    sc = prior.cov_approx(fb, sh)
    problem = dict(bank_json(fb), family="covapprox", sigma_hat=matrix_to_json(sh))
    return problem, {"sigma": matrix_to_json(sc)}


def spectral_prior_instance(rng, kind, n=None, m=1):
    n = n or int(rng.integers(2, 6))
    fb = random_bank(rng, n, m)
    sigma = moment.gamma_apply(fb, random_spectrum(rng, m)).real
    psi = random_spectrum(rng, m, order=2)
    fn = prior.is_spectral_solve if kind == "is" else prior.kl_spectral_solve
    _, lam = fn(fb, sigma, psi)
    problem = dict(bank_json(fb), family=kind, sigma=matrix_to_json(sigma),
                   prior=grid_to_json(psi))
    return problem, {"Lambda": matrix_to_json(lam)}


def circulant_instance(rng, N=None, m=None, n=None):
    m = m or int(rng.integers(1, 4))
    N = N or int(rng.integers(8, 25))
    n = n or int(rng.integers(1, min(4, N // 2 - 1) + 1))
    lags = random_lags(rng, m, n)
    spec = circulant.ReciprocalSpec(N, lags)
    sigma, _ = circulant.circulant_complete(spec)
    problem = {"family": "circulant", "N": N, "lags": lags_to_json(lags), "prior": None}
    return problem, {"row": lags_to_json(sigma.row)}


def gibbs_instance(rng, K=None, d=None):
    K = K or int(rng.integers(5, 40))
    d = d or int(rng.integers(1, 4))
    L = rng.standard_normal((d, K))
    mu = rng.uniform(0.5, 2.0, K)
    q = rng.dirichlet(np.ones(K))
    fp = gibbs.FeatureProblem(L, L @ q, mu)
    res = gibbs.fit(fp)
    problem = {"family": "gibbs", "features": L.tolist(), "target": fp.target.tolist(),
               "mu": mu.tolist()}
    return problem, {"p": res.p.tolist()}


def bridge_instance(rng, K=None):
    K = K or int(rng.integers(3, 30))
    P = rng.uniform(0.1, 1.0, (K, K))
    P /= P.sum(axis=1, keepdims=True)
    r0, r1 = rng.dirichlet(np.ones(K)), rng.dirichlet(np.ones(K))
    r0[-1] = 1.0 - r0[:-1].sum()
    r1[-1] = 1.0 - r1[:-1].sum()
    sol = bridge.solve_bridge(bridge.BridgeProblem(P, r0, r1))
    problem = {"family": "bridge", "P": P.tolist(), "rho0": r0.tolist(), "rho1": r1.tolist()}
    return problem, {"q": sol.q.tolist()}


BUILDERS = {
    "dempster": dempster_instance,
    "matrix_prior": matrix_prior_instance,
    "burg": burg_instance,
    "moment": moment_instance,
    "covapprox": covapprox_instance,
    "is": lambda rng: spectral_prior_instance(rng, "is"),
    "kl": lambda rng: spectral_prior_instance(rng, "kl"),
    "circulant": circulant_instance,
    "gibbs": gibbs_instance,
    "bridge": bridge_instance,
}


# --- perturbation -----------------------------------------------------------------


def _bump_matrix(obj, rng, eps):
    a = np.array(obj["re"], dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    i, j = rng.integers(0, a.shape[0]), rng.integers(0, a.shape[1])
    a[i, j] += eps
    if a.shape[0] == a.shape[1] and i != j:
        a[j, i] += eps
    return dict(obj, re=a.tolist())


def perturb(problem, solution, rng, eps=0.1):
    """Copy of ``solution`` with one coordinate moved by ``eps``.

    Symmetric objects get the mirrored entry moved too so the candidate stays
    in the solution's ambient space.
    """
    fam = problem["family"]
    sol = dict(solution)
    if fam in ("dempster", "covapprox"):
        sol["sigma"] = _bump_matrix(sol["sigma"], rng, eps)
    elif fam == "matrix_prior":
        sol["M"] = _bump_matrix(sol["M"], rng, eps)
    elif fam in ("moment", "pick", "is", "kl"):
        sol["Lambda"] = _bump_matrix(sol["Lambda"], rng, eps)
    elif fam == "burg":
        C = list(sol["A"]["C"])
        k = int(rng.integers(0, len(C)))
        C[k] = _bump_matrix(C[k], rng, eps)
        sol["A"] = dict(sol["A"], C=C)
    elif fam == "circulant":
        row = np.array([np.array(c["re"], dtype=float) for c in sol["row"]["C"]])
        N = row.shape[0]
        k = int(rng.integers(0, N))
        i, j = rng.integers(0, row.shape[1], 2)
        row[k, i, j] += eps
        if (k, i) != ((-k) % N, j):
            row[(-k) % N, j, i] += eps
        sol["row"] = lags_to_json(row)
    elif fam == "gibbs":
        p = np.array(sol["p"])
        p[rng.integers(0, p.size)] += eps
        sol["p"] = p.tolist()
    elif fam == "bridge":
        q = np.array(sol["q"])
        q[rng.integers(0, q.shape[0]), rng.integers(0, q.shape[1])] += eps
        sol["q"] = q.tolist()
    else:
        raise ValueError(fam)
    return sol
