"""Hermitian matrix algebra, frequency-grid quadrature and the orthogonality certificate.

Every maximum-entropy problem handled by this package has an affine feasible
set ``W = h + V``.  A point of ``W`` is a critical point of a smooth entropy
functional exactly when the functional's gradient there is orthogonal to
``V``.  :func:`orthogonality_residual` measures how far a gradient is from
``V^perp`` and is used as a solver-independent certificate throughout.

Matrices are plain :class:`numpy.ndarray` objects.  Spectral densities are
sampled on the uniform grid ``theta_k = -pi + 2 pi k / G`` and carried by
:class:`SpectrumGrid`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "hermitian",
    "is_pd",
    "trace_inner",
    "logdet",
    "logdet_grad",
    "hermitian_basis",
    "SubspaceBasis",
    "AffineProblem",
    "orthogonality_residual",
    "SpectrumGrid",
    "frequency_grid",
    "quadrature",
    "fourier_coeff",
    "pseudo_polynomial",
    "grid_inner",
    "spectral_orthogonality_residual",
]

PINV_CUTOFF = 1e-12


def hermitian(a, dim=None):
    """Return the Hermitian part ``(a + a^*)/2`` of a square matrix.

    Real input stays real.  ``dim`` optionally asserts the size.
    """
    a = np.asarray(a)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise InputError("matrix dimension must be at least 1")
    if dim is not None and a.shape[0] != dim:
        raise InputError(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.iscomplexobj(a):
        a = a.astype(float)
    return 0.5 * (a + a.conj().T)


def _is_real(*arrays):
    return all(not np.iscomplexobj(a) or not np.any(np.imag(a)) for a in arrays)


def is_pd(m):
    """Cholesky-based positive-definiteness test.

    A pivot smaller than ``1e-12 * trace / n`` counts as failure.
    """
    m = hermitian(m)
    n = m.shape[0]
    scale = np.trace(m).real / n
    if not np.isfinite(scale) or scale <= 0:
        return False
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return bool(np.min(np.abs(np.diag(L))) ** 2 > 1e-12 * scale)


def trace_inner(m1, m2):
    """``tr[m1^* m2]``; real for Hermitian arguments."""
    m1 = np.asarray(m1)
    m2 = np.asarray(m2)
    if m1.shape != m2.shape:
        raise InputError(f"dimension mismatch: {m1.shape} vs {m2.shape}")
    return float(np.real(np.vdot(m1, m2)))


def logdet(m):
    """``log|det m|`` via LU."""
    sign, val = np.linalg.slogdet(np.asarray(m))
    if sign == 0:
        raise InputError("singular matrix")
    return float(val)


def logdet_grad(m):
    """Gradient of ``log|det M|`` in the trace inner product, i.e. ``M^{-*}``."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise InputError("singular input: smallest singular value below 1e-12 * largest")
    return np.linalg.inv(m).conj().T


def _realvec(m):
    """Real isometric embedding for the trace inner product."""
    m = np.asarray(m)
    flat = m.reshape(m.shape[:-2] + (-1,))
    return np.concatenate([flat.real, flat.imag], axis=-1)


def hermitian_basis(n, real=False):
    """Orthonormal basis of the Hermitian (or real symmetric) ``n x n`` matrices.

    Returns an array of shape ``(D, n, n)`` with ``D = n**2`` (complex) or
    ``n(n+1)/2`` (real).
    """
    dtype = float if real else complex
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=dtype)
        e[i, i] = 1.0
        out.append(e)
    r2 = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=dtype)
            e[i, j] = e[j, i] = r2
            out.append(e)
            if not real:
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = -1j * r2
                e[j, i] = 1j * r2
                out.append(e)
    return np.array(out)


class SubspaceBasis:
    """Explicit span of Hermitian matrices.

    Parameters
    ----------
    elements : array_like, shape (k, n, n)
        Spanning matrices; each is symmetrized.  ``k = 0`` is allowed and
        represents the zero subspace, in which case ``n`` must be given.
    n : int, optional
        Ambient dimension (needed only for an empty basis).
    """

    def __init__(self, elements, n=None):
        elements = list(elements)
        if not elements:
            if n is None:
                raise InputError("empty basis needs an explicit ambient dimension")
            self.n = int(n)
            self.elements = np.zeros((0, self.n, self.n))
        else:
            mats = [hermitian(e) for e in elements]
            self.n = mats[0].shape[0]
            if any(e.shape != (self.n, self.n) for e in mats):
                raise InputError("basis elements must share one dimension")
            if n is not None and int(n) != self.n:
                raise InputError(f"basis dimension {self.n} differs from n={n}")
            self.elements = np.array(mats)
            vecs = _realvec(self.elements)
            s = np.linalg.svd(vecs, compute_uv=False)
            if s[-1] <= 1e-10 * s[0]:
                raise InputError("basis elements are linearly dependent")
        self._q = None

    def __len__(self):
        return self.elements.shape[0]

    @property
    def is_real(self):
        return _is_real(self.elements)

    def _orthonormal_vecs(self):
        if self._q is None:
            if len(self) == 0:
                self._q = np.zeros((0, 2 * self.n * self.n))
            else:
                # Gram-matrix least squares with pseudo-inverse cutoff.
                vecs = _realvec(self.elements)
                gram = vecs @ vecs.T
                w, u = np.linalg.eigh(gram)
                keep = w > PINV_CUTOFF * w.max()
                self._q = (u[:, keep] / np.sqrt(w[keep])).T @ vecs
        return self._q

    def project(self, d):
        """Orthogonal projection of ``d`` onto the span."""
        d = np.asarray(d)
        if d.shape != (self.n, self.n):
            raise InputError(f"dimension mismatch: {d.shape} vs {(self.n, self.n)}")
        q = self._orthonormal_vecs()
        v = q.T @ (q @ _realvec(d))
        nn = self.n * self.n
        out = (v[:nn] + 1j * v[nn:]).reshape(self.n, self.n)
        return out.real if not np.iscomplexobj(d) and self.is_real else out

    def coordinates(self, d):
        """Least-squares coefficients of ``d`` in terms of ``elements``."""
        vecs = _realvec(self.elements)
        coef, *_ = np.linalg.lstsq(vecs.T, _realvec(np.asarray(d)), rcond=None)
        return coef

    def combine(self, coef):
        coef = np.asarray(coef, dtype=float)
        if len(self) == 0:
            return np.zeros((self.n, self.n))
        return np.tensordot(coef, self.elements, axes=1)

    def complement(self, real=None):
        """Orthonormal basis of the orthogonal complement.

        The ambient space is the real symmetric matrices when ``real`` is true
        (default: when every element is real) and the complex Hermitian
        matrices otherwise.
        """
        if real is None:
            real = self.is_real
        amb = hermitian_basis(self.n, real=real)
        if len(self) == 0:
            return SubspaceBasis(amb)
        q = self._orthonormal_vecs()
        c = _realvec(amb) @ q.T  # ambient coordinates of V, shape (D, k)
        u, s, _ = np.linalg.svd(c, full_matrices=True)
        rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
        null = u[:, rank:]
        if null.shape[1] == 0:
            return SubspaceBasis([], n=self.n)
        return SubspaceBasis(np.tensordot(null.T, amb, axes=1))


@dataclass(frozen=True)
class AffineProblem:
    """Affine set ``offset + span(basis)``."""

    offset: np.ndarray
    basis: SubspaceBasis

    def __post_init__(self):
        off = hermitian(self.offset)
        if off.shape[0] != self.basis.n:
            raise InputError("offset and basis must share the ambient dimension")
        object.__setattr__(self, "offset", off)

    @property
    def n(self):
        return self.basis.n

    def distance(self, m):
        """Norm of the component of ``m - offset`` orthogonal to the basis span."""
        d = hermitian(m) - self.offset
        return float(np.linalg.norm(d - self.basis.project(d)))


def orthogonality_residual(d, v):
    """Normalized length of the projection of ``d`` onto ``span(v)``.

    Zero certifies ``d`` in ``V^perp``; ``0`` is also returned for ``d = 0``.
    """
    d = np.asarray(d)
    if d.shape != (v.n, v.n):
        raise InputError(f"dimension mismatch: {d.shape} vs {(v.n, v.n)}")
    nd = np.linalg.norm(d)
    if nd == 0.0 or len(v) == 0:
        return 0.0
    return float(np.linalg.norm(v.project(d)) / nd)


# --- frequency grid -------------------------------------------------------


def frequency_grid(size):
    """``theta_k = -pi + 2 pi k / size`` for ``k = 0..size-1``."""
    return -np.pi + 2.0 * np.pi * np.arange(size) / size


def _check_grid_size(size):
    if size < 1 or size & (size - 1):
        raise InputError(f"grid size must be a power of two, got {size}")


@dataclass(frozen=True)
class SpectrumGrid:
    """Matrix spectral density sampled on the uniform grid.

    ``values`` has shape ``(G, m, m)``; each slice is made Hermitian on
    construction.  Scalar densities may be passed with shape ``(G,)``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None, None]
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise InputError(f"spectrum values must have shape (G, m, m), got {v.shape}")
        _check_grid_size(v.shape[0])
        v = 0.5 * (v + np.conj(np.swapaxes(v, 1, 2)))
        v = v.astype(complex)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f, size, m=None):
        """Sample ``f(theta)`` (vectorized over theta) on the grid."""
        theta = frequency_grid(size)
        vals = np.asarray(f(theta))
        if vals.ndim == 1:
            vals = vals[:, None, None]
        return cls(vals)

    @classmethod
    def constant(cls, c, size):
        c = hermitian(np.atleast_2d(c))
        return cls(np.broadcast_to(c, (size,) + c.shape).copy())

    @property
    def size(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    @property
    def theta(self):
        return frequency_grid(self.size)

    def min_eig(self):
        return float(np.linalg.eigvalsh(self.values).min())

    def is_coercive(self):
        return self.min_eig() > 0.0

    def scalar(self):
        """Real samples of a scalar density."""
        if self.m != 1:
            raise InputError("spectrum is not scalar")
        return self.values[:, 0, 0].real

    def inv(self):
        return SpectrumGrid(np.linalg.inv(self.values))

    def __add__(self, other):
        return SpectrumGrid(self.values + other.values)

    def __sub__(self, other):
        return SpectrumGrid(self.values - other.values)

    def __mul__(self, c):
        return SpectrumGrid(self.values * float(c))

    __rmul__ = __mul__


def _pairwise_mean(a):
    # Move the grid axis last so numpy's pairwise summation applies to it.
    b = np.ascontiguousarray(np.moveaxis(a, 0, -1))
    return b.sum(axis=-1) / a.shape[0]


def quadrature(phi):
    """Uniform average ``(1/G) sum_k values[k]``, i.e. ``(1/2pi) int phi``."""
    vals = phi.values if isinstance(phi, SpectrumGrid) else np.asarray(phi)
    if vals.shape[0] == 0:
        raise InputError("empty grid")
    return _pairwise_mean(vals)


def fourier_coeff(phi, k):
    """``C_k = (1/G) sum_t values[t] e^{j theta_t k}`` so ``phi = sum C_k e^{-j theta k}``."""
    k = int(k)
    if 2 * abs(k) >= phi.size:
        raise InputError(f"|k|={abs(k)} too large for grid of size {phi.size}")
    w = np.exp(1j * phi.theta * k)
    return _pairwise_mean(phi.values * w[:, None, None])


def pseudo_polynomial(coeffs, size):
    """Evaluate ``sum_{|k|<=p} C_k e^{-j theta k}`` with ``C_{-k} = C_k^*``.

    ``coeffs`` holds ``C_0 .. C_p`` with shape ``(p+1, m, m)`` or ``(p+1,)``.
    """
    c = np.asarray(coeffs)
    if c.ndim == 1:
        c = c[:, None, None]
    theta = frequency_grid(size)
    out = np.broadcast_to(c[0], (size,) + c.shape[1:]).astype(complex)
    for k in range(1, c.shape[0]):
        e = np.exp(-1j * theta * k)[:, None, None]
        out = out + c[k] * e + c[k].conj().T * np.conj(e)
    return SpectrumGrid(out)


def grid_inner(phi, psi):
    """``(1/2pi) int tr[phi psi] dtheta`` on the grid."""
    a = phi.values if isinstance(phi, SpectrumGrid) else np.asarray(phi)
    b = psi.values if isinstance(psi, SpectrumGrid) else np.asarray(psi)
    return float(np.real(_pairwise_mean(np.einsum("gab,gba->g", a, b))))


def spectral_orthogonality_residual(d, basis):
    """Distance of the grid function ``d`` from ``span(basis)``, relative to ``|d|``.

    ``basis`` is a sequence of grid functions (arrays ``(G, m, m)``) spanning
    ``V^perp``; the return value is ``|P_V d| / |d|`` in the grid inner product.
    """
    dv = d.values if isinstance(d, SpectrumGrid) else np.asarray(d)
    b = np.array([x.values if isinstance(x, SpectrumGrid) else np.asarray(x) for x in basis])
    scale = 1.0 / np.sqrt(dv.shape[0])
    flat = dv.ravel()
    dvec = np.concatenate([flat.real, flat.imag]) * scale
    nd = np.linalg.norm(dvec)
    if nd == 0.0:
        return 0.0
    if len(b) == 0:
        return 1.0
    bf = b.reshape(len(b), -1)
    bvec = np.concatenate([bf.real, bf.imag], axis=1) * scale
    coef, *_ = np.linalg.lstsq(bvec.T, dvec, rcond=PINV_CUTOFF)
    return float(np.linalg.norm(dvec - bvec.T @ coef) / nd)
