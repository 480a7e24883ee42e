import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxent.core import (AffineProblem, SpectrumGrid, SubspaceBasis, fourier_coeff, frequency_grid,
                         grid_inner, hermitian, hermitian_basis, is_pd, logdet, logdet_grad,
                         orthogonality_residual, pseudo_polynomial, quadrature,
                         spectral_orthogonality_residual, trace_inner)
from maxent.errors import InputError


def test_frequency_grid_endpoints():
    t = frequency_grid(8)
    assert t[0] == -np.pi
    assert np.allclose(np.diff(t), 2 * np.pi / 8)


@pytest.mark.parametrize("size", [0, 3, 100])
def test_grid_size_must_be_power_of_two(size):
    with pytest.raises(InputError):
        SpectrumGrid.constant(1.0, size)


@pytest.mark.parametrize("n,real", [(1, True), (3, True), (3, False), (4, False)])
def test_hermitian_basis_orthonormal(n, real):
    b = hermitian_basis(n, real=real)
    assert len(b) == (n * (n + 1) // 2 if real else n * n)
    gram = np.array([[trace_inner(x, y) for y in b] for x in b])
    assert np.allclose(gram, np.eye(len(b)), atol=1e-14)


def test_hermitian_rejects_non_square():
    with pytest.raises(InputError):
        hermitian(np.ones((2, 3)))


def test_logdet_gradient_matches_finite_difference():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 4))
    m = a @ a.T + 4 * np.eye(4)
    d = hermitian(rng.standard_normal((4, 4)))
    h = 1e-6
    fd = (logdet(m + h * d) - logdet(m - h * d)) / (2 * h)
    assert abs(fd - trace_inner(logdet_grad(m), d)) < 1e-7


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_complement_is_orthogonal(n, k, seed):
    rng = np.random.default_rng(seed)
    k = min(k, n * (n + 1) // 2 - 1)
    elems = [hermitian(rng.standard_normal((n, n))) for _ in range(k)]
    v = SubspaceBasis(elems)
    perp = v.complement()
    assert len(v) + len(perp) == n * (n + 1) // 2
    for p in perp.elements:
        assert orthogonality_residual(p, v) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    v = SubspaceBasis([hermitian(rng.standard_normal((3, 3))) for _ in range(2)])
    d = hermitian(rng.standard_normal((3, 3)))
    p = v.project(d)
    assert np.allclose(v.project(p), p, atol=1e-13)
    assert orthogonality_residual(d - p, v) < 1e-12


def test_affine_distance():
    off = np.eye(2)
    e = np.array([[0.0, 1.0], [1.0, 0.0]])
    ap = AffineProblem(off, SubspaceBasis([e]))
    assert ap.distance(off + 3 * e) < 1e-14
    assert abs(ap.distance(off + np.diag([1.0, 0.0])) - 1.0) < 1e-14


def test_is_pd():
    assert is_pd(np.eye(3))
    assert not is_pd(np.diag([1.0, 0.0]))
    assert not is_pd(np.diag([1.0, -1.0]))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_fourier_coefficients_round_trip(m, p, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((p + 1, m, m)) + 1j * rng.standard_normal((p + 1, m, m))
    c[0] = c[0] + c[0].conj().T
    phi = pseudo_polynomial(c, 64)
    for k in range(p + 1):
        assert np.allclose(fourier_coeff(phi, k), c[k], atol=1e-12)
    assert np.allclose(fourier_coeff(phi, p + 1), 0, atol=1e-12)
    assert np.allclose(phi.values, np.conj(np.swapaxes(phi.values, 1, 2)))


def test_fourier_coeff_rejects_aliased_lag():
    with pytest.raises(InputError):
        fourier_coeff(SpectrumGrid.constant(1.0, 16), 8)


def test_quadrature_and_inner_product():
    phi = pseudo_polynomial([2.0, 0.5], 256)
    assert abs(quadrature(phi)[0, 0] - 2.0) < 1e-14
    # Parseval: C_0^2 + 2 |C_1|^2
    assert abs(grid_inner(phi, phi) - (4.0 + 2 * 0.25)) < 1e-12


def test_spectrum_grid_algebra():
    a = SpectrumGrid.from_function(lambda t: 2 + np.cos(t), 64)
    b = SpectrumGrid.constant(1.0, 64)
    assert np.allclose((a - b).values, (a + (-1) * b).values)
    assert np.allclose(a.inv().values * a.values, 1)
    assert np.allclose((2 * a).values, 2 * a.values)
    assert a.is_coercive() and abs(a.min_eig() - 1.0) < 1e-3


def test_spectral_orthogonality_residual():
    basis = [pseudo_polynomial([1.0], 64).values, pseudo_polynomial([0.0, 1.0], 64).values]
    inside = pseudo_polynomial([3.0, -2.0], 64)
    outside = pseudo_polynomial([0.0, 0.0, 1.0], 64)
    assert spectral_orthogonality_residual(inside, basis) < 1e-14
    assert abs(spectral_orthogonality_residual(outside, basis) - 1.0) < 1e-14
