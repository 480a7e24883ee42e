"""``maxent`` command-line interface.

Every solver subcommand prints (or writes to ``--output``) a JSON document

    {"family": ..., "problem": {...}, "solution": {...}, "certificate": {...}}

that ``maxent check --solution`` re-verifies.  Tabular results (spectra,
couplings, flows) go to CSV side files next to ``--output`` or, with
``--format csv``, replace the JSON document.

Exit codes: 0 converged, 1 input error, 2 solver did not converge.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bridge, burg, circulant, dempster, gibbs, moment, prior
from .check import certify, grid_to_json, parse_complex_list, parse_partial
from .core import _check_grid_size
from .errors import InputError, MaxEntError, SolverError
from .io import (array_from_csv, array_to_csv, dumps, lags_from_json, lags_to_json, load_json,
                 matrix_from_json, matrix_to_json, spectrum_from_csv, spectrum_to_csv)

DEFAULT_TOL = 1e-8
DEFAULT_GRID = 4096


def _read_text(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _grid(args):
    size = args.grid
    if size is None:
        size = int(os.environ.get("MAXENT_GRID", DEFAULT_GRID))
    _check_grid_size(size)
    return size


def _tol(args, default=DEFAULT_TOL):
    tol = default if args.tol is None else args.tol
    if not tol > 0:
        raise InputError("--tol must be positive")
    return tol


def _kw(args, default_tol=DEFAULT_TOL):
    kw = {"tol": _tol(args, default_tol)}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    return kw


def _document(family, problem, solution, iterations, solver_ok, tol):
    problem = dict(problem, family=family)
    cert = certify(problem, solution)
    cert["iterations"] = int(iterations)
    cert["converged"] = bool(solver_ok and cert["constraint_residual"] <= tol
                             and cert["orthogonality_residual"] <= tol)
    return {"family": family, "problem": problem, "solution": solution, "certificate": cert}


def _solve(fn, *a, **kw):
    """Run a solver; on non-convergence return its best iterate and ``ok=False``."""
    try:
        return fn(*a, **kw), True, None
    except SolverError as exc:
        if exc.best is None:
            raise
        return exc.best, False, str(exc)


# --- subcommands --------------------------------------------------------------


def cmd_dempster(args):
    problem = load_json(args.input)
    p = parse_partial(problem)
    tol = _tol(args, 1e-9)
    out, ok, msg = _solve(dempster.complete, p, return_info=True, **_kw(args, 1e-9))
    sigma, info = out if ok else (out, {"iterations": args.max_iter or 200})
    sol = {"sigma": matrix_to_json(sigma)}
    doc = _document("dempster", problem, sol, info["iterations"], ok, tol)
    doc["certificate"]["entropy"] = doc["certificate"]["objective_value"]
    return doc, {}, msg


def cmd_burg(args):
    lags = lags_from_json(load_json(args.lags), args.lags)
    missing = [int(k) for k in args.missing.split(",") if k.strip()] if args.missing else []
    size = _grid(args)
    tol = _tol(args)
    kw = {"tol": min(tol, 1e-10)}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    c = burg.CovSequence(lags, frozenset(missing))
    try:
        model, phi, info = burg.burg_extend(c, size, return_info=True, **kw)
        ok, msg = True, None
    except SolverError as exc:
        if exc.best is None:
            raise
        A, ok, msg = exc.best, False, str(exc)
        model = burg.ARModel(A, np.zeros((0,) + A.shape[1:]), np.eye(A.shape[1]))
        phi, info = model.spectrum(size), {"iterations": kw.get("max_iter", 200)}
    problem = {"lags": lags_to_json(lags), "missing": missing, "grid": size}
    sol = {"A": lags_to_json(model.A), "a": lags_to_json(model.a) if len(model.a) else None,
           "R": matrix_to_json(model.R)}
    doc = _document("burg", problem, sol, info["iterations"], ok, tol)
    return doc, {"spectrum": spectrum_to_csv(phi)}, msg


def _bank_args(args):
    A = matrix_from_json(load_json(args.A), args.A)
    B = matrix_from_json(load_json(args.B), args.B)
    return moment.FilterBank(A, B), {"A": matrix_to_json(A), "B": matrix_to_json(B)}


def cmd_moment(args):
    fb, problem = _bank_args(args)
    sigma = matrix_from_json(load_json(args.sigma), args.sigma)
    size = _grid(args)
    phi, lam = moment.maxent_spectrum(fb, sigma, size)
    problem.update(sigma=matrix_to_json(sigma), grid=size)
    doc = _document("moment", problem, {"Lambda": matrix_to_json(lam)}, 0, True, _tol(args))
    return doc, {"spectrum": spectrum_to_csv(phi)}, None


def _complex_json(z):
    z = np.asarray(z, dtype=complex)
    return {"re": z.real.tolist(), "im": z.imag.tolist()}


def cmd_pick(args):
    p = parse_complex_list(load_json(args.points), args.points)
    w = parse_complex_list(load_json(args.values), args.values)
    size = _grid(args)
    fb, sigma = moment.pick_to_problem(p, w)
    phi, lam = moment.maxent_spectrum(fb, sigma, size)
    wr = moment.recover_interpolants(phi, p)
    # Interpolants are fixed up to a common imaginary constant.
    shift = np.mean((w - wr).imag)
    err = float(np.max(np.abs(wr + 1j * shift - w)))
    problem = {"points": _complex_json(p), "values": _complex_json(w), "grid": size}
    sol = {"Lambda": matrix_to_json(lam), "recovered": _complex_json(wr)}
    doc = _document("pick", problem, sol, 0, True, _tol(args))
    doc["certificate"]["roundtrip_error"] = err
    doc["certificate"]["imaginary_gauge"] = float(shift)
    return doc, {"spectrum": spectrum_to_csv(phi)}, None


def cmd_covapprox(args):
    fb, problem = _bank_args(args)
    y = array_from_csv(_read_text(args.series), args.series)
    sh = prior.sample_covariance(fb, y if y.shape[1] > 1 else y[:, 0], args.burn_in)
    tol = _tol(args)
    out, ok, msg = _solve(prior.cov_approx, fb, sh, return_info=True, **_kw(args))
    sc, info = out if ok else (out, {"iterations": args.max_iter or 500})
    problem["sigma_hat"] = matrix_to_json(sh)
    sol = {"sigma": matrix_to_json(sc)}
    if ok:
        sol["Lambda"] = matrix_to_json(info["Lambda"])
    doc = _document("covapprox", problem, sol, info["iterations"], ok, tol)
    if ok:
        doc["certificate"]["Lambda_residual"] = info["Lambda_residual"]
    return doc, {}, msg


def _spectral_prior(args, family):
    fb, problem = _bank_args(args)
    sigma = matrix_from_json(load_json(args.sigma), args.sigma)
    psi = spectrum_from_csv(_read_text(args.prior), args.prior)
    tol = _tol(args)
    fn = prior.is_spectral_solve if family == "is" else prior.kl_spectral_solve
    out, ok, msg = _solve(fn, fb, sigma, psi, return_info=True, **_kw(args))
    if ok:
        phi, lam, info = out
    else:
        (phi, lam), info = out, {"iterations": args.max_iter or 500}
    problem.update(sigma=matrix_to_json(sigma), prior=grid_to_json(psi))
    doc = _document(family, problem, {"Lambda": matrix_to_json(lam)}, info["iterations"], ok, tol)
    return doc, {"spectrum": spectrum_to_csv(phi)}, msg


def cmd_is(args):
    return _spectral_prior(args, "is")


def cmd_kl(args):
    return _spectral_prior(args, "kl")


def cmd_circulant(args):
    lags = lags_from_json(load_json(args.lags), args.lags).real
    spec = circulant.ReciprocalSpec(args.N, lags)
    pr = None
    problem = {"N": args.N, "lags": lags_to_json(lags), "prior": None}
    if args.prior:
        row = lags_from_json(load_json(args.prior), args.prior).real
        pr = circulant.BlockCirculant(row)
        problem["prior"] = lags_to_json(pr.row)
    tol = _tol(args)
    out, ok, msg = _solve(circulant.circulant_complete, spec, pr, return_info=True, **_kw(args))
    if ok:
        sigma, M, info = out
    else:
        sigma, M, info = out, None, {"iterations": args.max_iter or 1000}
    sol = {"row": lags_to_json(sigma.row)}
    if M is not None:
        sol["M"] = lags_to_json(M)
    doc = _document("circulant", problem, sol, info["iterations"], ok, tol)
    return doc, {}, msg


def cmd_circulant_sample(args):
    doc_in = load_json(args.solution)
    sol = doc_in.get("solution", doc_in)
    if "row" not in sol:
        raise InputError(f"{args.solution}: no circulant first row ('row') found")
    sigma = circulant.BlockCirculant(lags_from_json(sol["row"], "row").real, tol=1e-8)
    y = circulant.sample_reciprocal(sigma, args.count, args.seed)
    flat = y.reshape(args.count, -1)
    header = [f"t{t}_c{c}" for t in range(sigma.N) for c in range(sigma.m)]
    doc = {"family": "circulant-sample", "count": args.count, "seed": args.seed,
           "N": sigma.N, "m": sigma.m, "samples": flat.tolist()}
    return doc, {"samples": array_to_csv(flat, header)}, None


def _fit_doc(fp, res, tol):
    problem = {"features": fp.features.tolist(), "target": fp.target.tolist(),
               "mu": fp.mu.tolist()}
    sol = {"p": res.p.tolist(), "theta": res.theta.tolist(), "Lambda": res.Lambda.tolist(),
           "Z": res.Z}
    doc = _document("gibbs", problem, sol, res.iterations, True, tol)
    doc["certificate"]["entropy"] = doc["certificate"]["objective_value"]
    return doc, {"p": array_to_csv(res.p, ["p"])}


def cmd_gibbs(args):
    L = array_from_csv(_read_text(args.features), args.features)
    c = array_from_csv(_read_text(args.target), args.target).ravel()
    mu = array_from_csv(_read_text(args.mu), args.mu).ravel() if args.mu else None
    fp = gibbs.FeatureProblem(L, c, mu)
    tol = _tol(args, 1e-10)
    kw = {"tol": min(tol, 1e-12)}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    res = gibbs.fit(fp, **kw)
    doc, tables = _fit_doc(fp, res, tol)
    return doc, tables, None


def cmd_dice(args):
    res = gibbs.dice(args.mean, args.faces)
    k = np.arange(1, args.faces + 1, dtype=float)
    doc, tables = _fit_doc(gibbs.FeatureProblem(k[None, :], [args.mean]), res, _tol(args, 1e-10))
    return doc, tables, None


def cmd_bridge(args):
    if args.heat is not None:
        if None in (args.grid_min, args.grid_max, args.points):
            raise InputError("--heat needs --grid-min, --grid-max and --points")
        x = np.linspace(args.grid_min, args.grid_max, args.points)
        P = bridge.heat_kernel(x, args.heat)
    elif args.kernel:
        P, x = array_from_csv(_read_text(args.kernel), args.kernel), None
    else:
        raise InputError("give --kernel or --heat")
    r0 = array_from_csv(_read_text(args.rho0), args.rho0).ravel()
    r1 = array_from_csv(_read_text(args.rho1), args.rho1).ravel()
    bp = bridge.BridgeProblem(P, r0, r1)
    tol = _tol(args, 1e-10)
    kw = {"tol": tol}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    sol_obj, ok, msg = _solve(bridge.solve_bridge, bp, **kw)
    problem = {"P": P.tolist(), "rho0": r0.tolist(), "rho1": r1.tolist()}
    sol = {"q": sol_obj.q.tolist(), "phihat0": sol_obj.phihat0.tolist(),
           "phi1": sol_obj.phi1.tolist()}
    doc = _document("bridge", problem, sol, sol_obj.iterations, ok, tol)
    doc["certificate"]["system_residual"] = sol_obj.system_residual(bp)
    tables = {"q": array_to_csv(sol_obj.q),
              "scalings": array_to_csv(np.column_stack([sol_obj.phihat0, sol_obj.phi1]),
                                       ["phihat0", "phi1"])}
    if args.times:
        if x is None:
            raise InputError("--times needs --heat (intermediate kernels)")
        times = [float(t) for t in args.times.split(",")]
        flow = bridge.heat_marginal_flow(sol_obj, x, 0.0, args.heat, times)
        rows = [[t, xi, v] for t, f in zip(times, flow) for xi, v in zip(x, f)]
        tables["flow"] = array_to_csv(rows, ["t", "x", "q"])
    return doc, tables, msg


def cmd_check(args):
    sol_doc = load_json(args.solution)
    if args.problem:
        problem = load_json(args.problem)
        problem = problem.get("problem", problem) if "family" not in problem else problem
        if "family" not in problem and "family" in sol_doc:
            problem = dict(problem, family=sol_doc["family"])
    else:
        if "problem" not in sol_doc:
            raise InputError("solution file has no embedded problem; pass --problem")
        problem = dict(sol_doc["problem"], family=sol_doc.get("family"))
    solution = sol_doc.get("solution", sol_doc)
    tol = _tol(args)
    cert = certify(problem, solution, tol=tol)
    doc = {"family": problem.get("family"), "certificate": cert}
    if not cert["converged"]:
        return doc, {}, "certificate residuals exceed the tolerance"
    return doc, {}, None


COMMANDS = {
    "dempster": cmd_dempster,
    "burg": cmd_burg,
    "moment": cmd_moment,
    "pick": cmd_pick,
    "covapprox": cmd_covapprox,
    "is-approx": cmd_is,
    "kl-approx": cmd_kl,
    "circulant": cmd_circulant,
    "circulant-sample": cmd_circulant_sample,
    "gibbs": cmd_gibbs,
    "dice": cmd_dice,
    "bridge": cmd_bridge,
    "check": cmd_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--max-iter", type=int, default=None)
    common.add_argument("--grid", type=int, default=None,
                        help="frequency grid size (power of two; env MAXENT_GRID)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--output", default=None, help="write the JSON document here")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="maxent", description="Maximum-entropy solvers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dempster", parents=[common], help="covariance completion")
    p.add_argument("--input", required=True)

    p = sub.add_parser("burg", parents=[common], help="covariance extension")
    p.add_argument("--lags", required=True)
    p.add_argument("--missing", default="")

    for name in ("moment", "is-approx", "kl-approx", "covapprox"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--A", required=True)
        p.add_argument("--B", required=True)
        if name == "covapprox":
            p.add_argument("--series", required=True)
            p.add_argument("--burn-in", type=int, default=None)
        else:
            p.add_argument("--sigma", required=True)
        if name in ("is-approx", "kl-approx"):
            p.add_argument("--prior", required=True, help="spectrum CSV")

    p = sub.add_parser("pick", parents=[common], help="Nevanlinna-Pick interpolation")
    p.add_argument("--points", required=True)
    p.add_argument("--values", required=True)

    p = sub.add_parser("circulant", parents=[common], help="circulant completion")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--lags", required=True)
    p.add_argument("--prior", default=None, help="first block row of the prior (lags JSON)")

    p = sub.add_parser("circulant-sample", parents=[common])
    p.add_argument("--solution", required=True)
    p.add_argument("--count", type=int, default=1000)

    p = sub.add_parser("gibbs", parents=[common], help="exponential-family fit")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--mu", default=None)

    p = sub.add_parser("dice", parents=[common], help="Boltzmann dice")
    p.add_argument("--mean", type=float, required=True)
    p.add_argument("--faces", type=int, default=6)

    p = sub.add_parser("bridge", parents=[common], help="discrete Schrodinger bridge")
    p.add_argument("--kernel", default=None)
    p.add_argument("--heat", type=float, default=None)
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--rho0", required=True)
    p.add_argument("--rho1", required=True)
    p.add_argument("--times", default=None, help="comma-separated times for the marginal flow")

    p = sub.add_parser("check", parents=[common], help="re-verify a solution")
    p.add_argument("--problem", default=None)
    p.add_argument("--solution", required=True)
    return parser


def _emit(args, doc, tables):
    if args.format == "csv":
        name = next(iter(tables), None)
        if name is None:
            raise InputError(f"{args.command} has no tabular output; use --format json")
        text = tables[name]
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return
    text = dumps(doc) + "\n"
    if args.output:
        out = Path(args.output)
        out.write_text(text)
        for name, csv_text in tables.items():
            out.with_name(f"{out.stem}.{name}.csv").write_text(csv_text)
    else:
        sys.stdout.write(text)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc, tables, msg = COMMANDS[args.command](args)
        _emit(args, doc, tables)
    except SolverError as exc:
        print(f"maxent {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (MaxEntError, ValueError) as exc:
        print(f"maxent {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if msg:
        print(f"maxent {args.command}: not converged: {msg}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
