"""Decimal text I/O: matrix JSON, lag lists, spectrum CSV and plain numeric CSV.

Floats are written with 17 significant digits so a write/read round trip is
bit-exact.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .core import SpectrumGrid
from .errors import InputError

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "lags_to_json",
    "lags_from_json",
    "spectrum_to_csv",
    "spectrum_from_csv",
    "array_to_csv",
    "array_from_csv",
    "dumps",
    "load_json",
]


def _num(x):
    return float(format(float(x), ".17g"))


def _nested(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return _num(a)
    return [_nested(r) for r in a]


def matrix_to_json(m):
    """``{"n": rows, "re": [[...]], "im": [[...]]}``; ``"m"`` holds the column count
    when the matrix is not square."""
    m = np.atleast_2d(np.asarray(m))
    out = {"n": int(m.shape[0])}
    if m.shape[1] != m.shape[0]:
        out["m"] = int(m.shape[1])
    out["re"] = _nested(m.real)
    if np.iscomplexobj(m) and np.any(m.imag):
        out["im"] = _nested(m.imag)
    return out


def matrix_from_json(obj, where="matrix"):
    """Inverse of :func:`matrix_to_json`; a one-dimensional ``"re"`` list is a column."""
    if isinstance(obj, (int, float)):
        return np.array([[float(obj)]])
    if isinstance(obj, list):
        obj = {"re": obj}
    if not isinstance(obj, dict) or "re" not in obj:
        raise InputError(f"{where}: expected an object with field 're'")
    try:
        re = np.array(obj["re"], dtype=float)
        if re.ndim == 1:
            re = re[:, None]
        im = np.array(obj["im"], dtype=float) if obj.get("im") is not None else None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: non-numeric entries ({exc})") from None
    rows = int(obj.get("n", re.shape[0]))
    cols = int(obj.get("m", rows)) if "m" in obj else re.shape[1]
    if re.shape != (rows, cols):
        raise InputError(f"{where}: field 're' has shape {re.shape}, expected {(rows, cols)}")
    if im is not None:
        im = im.reshape(re.shape) if im.size == re.size else None
        if im is None:
            raise InputError(f"{where}: fields 're' and 'im' differ in shape")
        return re + 1j * im
    return re


def lags_to_json(lags):
    lags = np.asarray(lags)
    if lags.ndim == 1:
        lags = lags[:, None, None]
    return {"m": int(lags.shape[1]), "C": [matrix_to_json(c) for c in lags]}


def lags_from_json(obj, where="lags"):
    if not isinstance(obj, dict) or "C" not in obj:
        raise InputError(f"{where}: expected an object with field 'C'")
    mats = [matrix_from_json(c, f"{where}.C[{k}]") for k, c in enumerate(obj["C"])]
    if not mats:
        raise InputError(f"{where}: empty lag list")
    m = int(obj.get("m", mats[0].shape[0]))
    for k, c in enumerate(mats):
        if c.shape != (m, m):
            raise InputError(f"{where}.C[{k}]: expected {m}x{m}, got {c.shape}")
    if any(np.iscomplexobj(c) for c in mats):
        return np.array(mats, dtype=complex)
    return np.array(mats)


def spectrum_to_csv(phi):
    """Rows ``theta,block_row,block_col,re,im`` for every grid point and entry."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "block_row", "block_col", "re", "im"])
    for t, v in zip(phi.theta, phi.values):
        for i in range(phi.m):
            for j in range(phi.m):
                w.writerow([format(t, ".17g"), i, j, format(v[i, j].real, ".17g"),
                            format(v[i, j].imag, ".17g")])
    return buf.getvalue()


def spectrum_from_csv(text, where="spectrum"):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["theta", "block_row", "block_col", "re", "im"]:
        raise InputError(f"{where}: header must be theta,block_row,block_col,re,im")
    recs = []
    for line, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != 5:
            raise InputError(f"{where}:{line}: expected 5 fields, got {len(r)}")
        try:
            recs.append((float(r[0]), int(r[1]), int(r[2]), float(r[3]), float(r[4])))
        except ValueError as exc:
            raise InputError(f"{where}:{line}: {exc}") from None
    m = max(max(r[1], r[2]) for r in recs) + 1
    if len(recs) % (m * m):
        raise InputError(f"{where}: {len(recs)} records is not a multiple of {m * m}")
    G = len(recs) // (m * m)
    vals = np.zeros((G, m, m), dtype=complex)
    thetas = sorted({r[0] for r in recs})
    if len(thetas) != G:
        raise InputError(f"{where}: expected {G} distinct theta values, got {len(thetas)}")
    index = {t: k for k, t in enumerate(thetas)}
    for t, i, j, re, im in recs:
        vals[index[t], i, j] = re + 1j * im
    return SpectrumGrid(vals)


def array_to_csv(a, header=None):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for r in a:
        w.writerow([format(x, ".17g") for x in r])
    return buf.getvalue()


def array_from_csv(text, where="csv"):
    """Numeric CSV; a non-numeric first line is treated as a header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    out = []
    for line, r in enumerate(rows, start=1):
        try:
            out.append([float(c) for c in r])
        except ValueError:
            if line == 1:
                continue
            raise InputError(f"{where}:{line}: non-numeric field in {r}") from None
    if not out:
        raise InputError(f"{where}: no numeric rows")
    if len({len(r) for r in out}) != 1:
        raise InputError(f"{where}: rows have different lengths")
    return np.array(out)


def dumps(obj):
    return json.dumps(obj, indent=2)


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
