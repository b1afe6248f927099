import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from erkc.errors import DimensionError, StageIndexError, ZeroEigenvalueNegativePower
from erkc.phi import gauss, make_scheme, phi, radau_iia, weight_b
from erkc.spectral import (
    dirichlet_laplacian_1d,
    dirichlet_laplacian_2d,
    explicit_diagonal,
    make_operator,
    periodic_laplacian_1d,
)


def fd_matrix(n):
    hx = 1.0 / (n + 1)
    return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / hx**2


def periodic_spectral_matrix(n):
    """Dense pseudospectral -d^2/dx^2 built column by column from unit vectors."""
    k = np.fft.fftfreq(n, 1.0 / n)
    lam = (2 * np.pi * k) ** 2
    if n % 2 == 0:
        lam[n // 2] = (np.pi * n) ** 2
    cols = [np.real(np.fft.ifft(lam * np.fft.fft(e))) for e in np.eye(n)]
    return np.array(cols).T


def test_fd_eigenvalues_formula():
    n = 17
    op = dirichlet_laplacian_1d(n)
    hx = 1 / (n + 1)
    k = np.arange(1, n + 1)
    assert np.allclose(op.eigenvalues, 4 / hx**2 * np.sin(k * np.pi / (2 * (n + 1))) ** 2, rtol=1e-14)
    assert np.allclose(np.sort(op.eigenvalues), np.linalg.eigvalsh(fd_matrix(n)), rtol=1e-12)


@pytest.mark.parametrize("n", [5, 16])
def test_dirichlet_1d_matches_dense_matrix(n):
    op = dirichlet_laplacian_1d(n)
    v = np.random.default_rng(1).normal(size=n)
    A = fd_matrix(n)
    assert np.allclose(op.apply_diagonal(op.eigenvalues, v), A @ v, rtol=1e-11, atol=1e-9)
    assert np.allclose(op.apply_semigroup(0.01, v), linalg.expm(-0.01 * A) @ v, atol=1e-12)


def test_dirichlet_2d_matches_kronecker():
    n = 6
    op = dirichlet_laplacian_2d(n)
    A1 = fd_matrix(n)
    A = np.kron(A1, np.eye(n)) + np.kron(np.eye(n), A1)
    v = np.random.default_rng(2).normal(size=n * n)
    assert np.allclose(op.apply_diagonal(op.eigenvalues, v), A @ v, rtol=1e-11, atol=1e-8)
    X, Y = op.coords
    assert X[1] == X[0] and Y[1] > Y[0]  # y varies fastest


@pytest.mark.parametrize("n", [8, 9])
def test_periodic_matches_dense_spectral(n):
    op = periodic_laplacian_1d(n)
    v = np.random.default_rng(3).normal(size=n)
    v_smooth = op.apply_semigroup(1e-3, v)  # damp the Nyquist mode, whose sign convention varies
    A = periodic_spectral_matrix(n)
    assert np.allclose(op.apply_diagonal(op.eigenvalues, v_smooth), A @ v_smooth, atol=1e-8)
    assert op.eigenvalues[0] == 0.0


def test_sine_mode_is_eigenvector():
    n = 63
    op = dirichlet_laplacian_1d(n)
    (x,) = op.coords
    v = np.sin(np.pi * x)
    out = op.apply_semigroup(0.1, v)
    assert np.max(np.abs(out - math.exp(-0.1 * op.eigenvalues[0]) * v)) <= 1e-10


@pytest.mark.parametrize("make", [lambda: dirichlet_laplacian_1d(31), lambda: dirichlet_laplacian_2d(7),
                                  lambda: periodic_laplacian_1d(32), lambda: explicit_diagonal([1, 2, 3])])
def test_round_trip_and_identity(make):
    op = make()
    v = np.random.default_rng(4).normal(size=op.dof)
    assert np.max(np.abs(op.inverse(op.forward(v)) - v)) <= 1e-12 * np.max(np.abs(v))
    assert np.max(np.abs(op.apply_semigroup(0.0, v) - v)) <= 1e-12 * np.max(np.abs(v))
    stacked = np.stack([v, 2 * v])
    assert op.forward(stacked).shape[0] == 2


def test_explicit_diagonal_actions():
    op = explicit_diagonal([1.0, 2.0])
    assert np.allclose(op.apply_semigroup(1.0, [1.0, 1.0]), [math.exp(-1), math.exp(-2)], rtol=1e-15)
    zero = explicit_diagonal([0.0])
    for j in range(1, 5):
        assert zero.apply_phi(j, 3.0, [1.0])[0] == pytest.approx(1 / math.factorial(j), rel=1e-15)
    ten = explicit_diagonal([10.0])
    assert ten.apply_phi(1, 1.0, [1.0])[0] == pytest.approx((1 - math.exp(-10)) / 10, rel=1e-14)


def test_phi_at_time_zero():
    op = dirichlet_laplacian_1d(9)
    v = np.arange(9.0)
    for j in (1, 2, 3):
        assert np.allclose(op.apply_phi(j, 0.0, v), v / math.factorial(j), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(lams=st.lists(st.floats(0, 500), min_size=1, max_size=8), t=st.floats(0, 2), j=st.integers(1, 4))
def test_diagonal_matches_scalar_path(lams, t, j):
    op = explicit_diagonal(lams)
    v = np.linspace(-1, 1, len(lams))
    expected_exp = np.array([math.exp(-t * lam) for lam in lams]) * v
    expected_phi = np.array([phi(j, -t * lam) for lam in lams]) * v
    assert np.allclose(op.apply_semigroup(t, v), expected_exp, rtol=1e-13, atol=1e-300)
    assert np.allclose(op.apply_phi(j, t, v), expected_phi, rtol=1e-13, atol=1e-300)


def test_apply_weight():
    be = make_scheme([1.0])
    op = explicit_diagonal([3.0, 7.0])
    v = np.array([1.0, 1.0])
    out = op.apply_weight(be, 0, 0.6, 0.2, v)
    assert np.allclose(out, 0.6 * op.apply_phi(1, 0.6 * 0.2, v), rtol=1e-14)
    r2 = radau_iia(2)
    for i in range(2):
        got = op.apply_weight(r2, i, 1 / 3, 0.2, v)
        want = [weight_b(r2, i, 1 / 3, -0.2 * lam) for lam in (3.0, 7.0)]
        assert np.allclose(got, want, rtol=1e-14)
    zero = explicit_diagonal([0.0])
    assert zero.apply_weight(r2, 0, 1.0, 0.5, [1.0])[0] == pytest.approx(0.75, abs=1e-14)
    with pytest.raises(StageIndexError):
        op.apply_weight(r2, 2, 1.0, 0.1, v)
    with pytest.raises(ValueError):
        op.apply_weight(r2, 0, 1.0, 0.0, v)


def test_fractional_powers():
    op = explicit_diagonal([4.0])
    assert op.apply_fractional_power(0.5, [1.0])[0] == pytest.approx(2.0, rel=1e-15)
    d = dirichlet_laplacian_1d(31)
    v = np.random.default_rng(5).normal(size=31)
    half = d.apply_fractional_power(0.5, d.apply_fractional_power(0.5, v))
    full = d.apply_fractional_power(1.0, v)
    assert np.max(np.abs(half - full)) <= 1e-10 * np.max(np.abs(full))
    assert np.array_equal(d.apply_fractional_power(0.0, v), v)
    with pytest.raises(ZeroEigenvalueNegativePower):
        periodic_laplacian_1d(8).apply_fractional_power(-0.5, np.ones(8))
    with pytest.raises(ValueError):
        d.apply_fractional_power(1.5, v)


def test_dimension_errors():
    op = dirichlet_laplacian_1d(8)
    with pytest.raises(DimensionError):
        op.apply_semigroup(0.1, np.ones(7))
    with pytest.raises(DimensionError):
        op.forward(np.ones((2, 9)))


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
def test_smoothing_bound(gamma):
    op = dirichlet_laplacian_1d(255)
    worst = 0.0
    for sch in (gauss(2), radau_iia(2), radau_iia(3)):
        for h in (2.0**-3, 2.0**-6, 2.0**-9):
            for theta in (0.1, 0.5, 1.0):
                mult = op.weight_multipliers(sch, theta, h)
                worst = max(worst, float(np.max((theta * h * op.eigenvalues) ** gamma * np.abs(mult))))
    assert worst <= 10.0


def test_make_operator():
    assert make_operator("periodic_laplacian_1d", 16).dof == 16
    assert make_operator("dirichlet_laplacian_2d", 4).dof == 16
    with pytest.raises(KeyError):
        make_operator("neumann", 4)
