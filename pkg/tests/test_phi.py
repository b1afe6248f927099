import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi

from erkc.errors import ConfluentNodes, NodeOutOfRange, StageIndexError
from erkc.phi import (
    check_order_conditions,
    gauss,
    make_scheme,
    phi,
    phi_series,
    radau_iia,
    scheme_from_name,
    weight_b,
    weight_matrix,
)

mpmath.mp.dps = 50


def phi_oracle(j, z):
    """50-digit phi_j: power series near 0, closed form elsewhere."""
    z = mpmath.mpc(z)
    if j == 0:
        return complex(mpmath.exp(z))
    if abs(z) < 30:
        return complex(mpmath.nsum(lambda k: z**k / mpmath.factorial(k + j), [0, mpmath.inf]))
    partial = sum(z**k / mpmath.factorial(k) for k in range(j))
    return complex((mpmath.exp(z) - partial) / z**j)


z_strategy = st.builds(
    lambda e, a: 10.0**e * cmath.exp(1j * a),
    st.floats(-8, 3),
    st.floats(0, 2 * math.pi),
).filter(lambda z: z.real <= 50)

real_z = st.floats(-1e3, 50).filter(lambda x: abs(x) >= 1e-8 or x == 0)


def test_phi_at_zero():
    assert phi(1, 0.0) == 1.0
    assert phi(2, 0.0) == 0.5
    for j in range(8):
        assert phi(j, 0.0) == pytest.approx(1 / math.factorial(j), rel=1e-15)


def test_phi1_at_one():
    assert phi(1, 1.0) == pytest.approx(math.e - 1, rel=1e-15)


def test_phi2_minus_ten_against_oracle():
    expected = phi_oracle(2, -10.0).real
    assert abs(phi(2, -10.0) - expected) <= 1e-12 * abs(expected)
    assert abs(phi(2, -10.0) - (phi(1, -10.0) - 1) / -10) <= 1e-12 * abs(expected)


@settings(max_examples=200, deadline=None)
@given(j=st.integers(0, 8), z=z_strategy)
def test_phi_matches_high_precision(j, z):
    ref = phi_oracle(j, z)
    assert abs(phi(j, z) - ref) <= 1e-13 * abs(ref)


@settings(max_examples=200, deadline=None)
@given(j=st.integers(0, 8), x=real_z)
def test_phi_real_matches_high_precision(j, x):
    ref = phi_oracle(j, x).real
    got = phi(j, x)
    assert isinstance(got, float)
    assert abs(got - ref) <= 1e-13 * abs(ref)


@settings(max_examples=300, deadline=None)
@given(j=st.integers(0, 6), z=z_strategy)
def test_recurrence_multiplied_form(j, z):
    lhs = z * phi(j + 1, z) + 1 / math.factorial(j)
    assert abs(lhs - phi(j, z)) <= 1e-12 * max(1.0, abs(phi(j, z)))


@settings(max_examples=300, deadline=None)
@given(j=st.integers(0, 6), z=z_strategy.filter(lambda z: abs(z) >= 1e-4))
def test_recurrence_divided_form(j, z):
    # dividing by z amplifies rounding in phi_j by 1/|z|, so tiny |z| is covered above
    rhs = (phi(j, z) - 1 / math.factorial(j)) / z
    assert abs(phi(j + 1, z) - rhs) <= 1e-10 * max(1.0, abs(phi(j + 1, z)))


def test_phi_array_matches_scalar():
    z = np.array([-1e3, -20.0, -1.0, -1e-6, 0.0, 1e-9, 0.3, 2.0, 40.0])
    for j in range(6):
        arr = phi(j, z)
        assert arr.shape == z.shape
        assert np.array_equal(arr, np.array([phi(j, float(v)) for v in z]))


def test_phi_series_container():
    ps = phi_series(4, -2.0)
    assert ps.max_index == 4
    assert ps.values == tuple(phi(j, -2.0) for j in range(1, 5))


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        phi(-1, 0.0)


# -- schemes -------------------------------------------------------------------

def test_backward_euler_scheme():
    sch = make_scheme([1.0])
    assert sch.s == 1
    assert np.allclose(sch.lagrange(np.linspace(0, 1, 5)), 1.0)
    assert sch.quadrature_order == 1


def test_radau2_lagrange_coefficients():
    sch = radau_iia(2)
    # ell_1 = 3/2 - 3 xi / 2, ell_2 = (xi - 1/3) / (2/3)
    assert np.allclose(sch.p[0], [1.5, -1.5], atol=1e-15)
    assert np.allclose(sch.p[1], [-0.5, 1.5], atol=1e-15)
    assert sch.quadrature_order == 3


@pytest.mark.parametrize(
    "sch, order",
    [
        (gauss(1), 2), (gauss(2), 4), (gauss(3), 6),
        (radau_iia(1), 1), (radau_iia(2), 3), (radau_iia(3), 5),
        (make_scheme([0.25, 0.75]), 2),
    ],
)
def test_quadrature_orders(sch, order):
    assert sch.quadrature_order == order


def test_gauss2_quadrature_conditions_exact():
    sch = make_scheme([0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6])
    for k in range(1, 5):
        lhs = sum(b * c ** (k - 1) for b, c in zip(sch.b0, sch.c)) / math.factorial(k - 1)
        assert abs(lhs - 1 / math.factorial(k)) < 1e-14
    assert sch.quadrature_order >= 3


@pytest.mark.parametrize("sch", [gauss(1), gauss(2), gauss(3), radau_iia(2), radau_iia(3)])
def test_lagrange_basis_properties(sch):
    L = sch.lagrange(sch.c)
    assert np.allclose(L, np.eye(sch.s), atol=1e-13)
    xi = np.random.default_rng(0).uniform(0, 1, 50)
    assert np.max(np.abs(sch.lagrange(xi).sum(axis=0) - 1)) <= 1e-13


def test_scheme_errors():
    with pytest.raises(ConfluentNodes):
        make_scheme([0.5, 0.5])
    with pytest.raises(NodeOutOfRange):
        make_scheme([0.5, 1.2])
    with pytest.raises(NodeOutOfRange):
        make_scheme([-0.1])
    with pytest.raises(ValueError):
        gauss(4)


def test_scheme_from_name():
    assert scheme_from_name("gauss", 2) == gauss(2)
    assert scheme_from_name("radau", 3) == radau_iia(3)
    sch = scheme_from_name("custom:1/4,3/4")
    assert np.allclose(sch.c, [0.25, 0.75])
    with pytest.raises(ValueError):
        scheme_from_name("lobatto", 2)
    with pytest.raises(ValueError):
        scheme_from_name("gauss")


# -- weights -------------------------------------------------------------------

def test_radau2_step_weights_at_zero():
    sch = radau_iia(2)
    assert abs(weight_b(sch, 0, 1.0, 0.0) - 0.75) <= 1e-14
    assert abs(weight_b(sch, 1, 1.0, 0.0) - 0.25) <= 1e-14


@pytest.mark.parametrize("theta, z", [(0.3, -2.0), (1.0, -50.0), (0.7, 1e-7), (0.5, 3j)])
def test_backward_euler_weight_closed_form(theta, z):
    sch = make_scheme([1.0])
    assert weight_b(sch, 0, theta, z) == pytest.approx(theta * phi(1, theta * z), rel=1e-14)


@pytest.mark.parametrize("c1, c2", [(1 / 3, 1.0), (0.25, 0.75)])
@pytest.mark.parametrize("theta, z", [(0.4, -3.0), (1.0, -0.01), (0.9, 2 - 1j)])
def test_two_stage_weight_closed_form(c1, c2, theta, z):
    sch = make_scheme([c1, c2])
    expected = c2 / (c2 - c1) * theta * phi(1, theta * z) - 1 / (c2 - c1) * theta**2 * phi(2, theta * z)
    assert weight_b(sch, 0, theta, z) == pytest.approx(expected, rel=1e-13)


def test_stage_index_checked():
    with pytest.raises(StageIndexError):
        weight_b(gauss(2), 2, 1.0, 0.0)
    with pytest.raises(StageIndexError):
        weight_b(gauss(2), -1, 1.0, 0.0)


def quad_weight(sch, i, theta, z):
    """Direct quadrature of int_0^theta exp((theta - x) z) ell_i(x) dx."""
    def f(x):
        return math.exp((theta - x) * z) * float(sch.lagrange(x)[i])
    val, _ = spi.quad(f, 0.0, theta, epsabs=1e-14, epsrel=1e-13)
    return val


@pytest.mark.parametrize("sch", [gauss(2), gauss(3), radau_iia(2), radau_iia(3)])
@pytest.mark.parametrize("z", [-0.2, -5.0, -40.0, 1.5])
def test_stage_coefficients_by_quadrature(sch, z):
    for k, ck in enumerate(sch.c):
        row = weight_matrix(sch, ck, z)
        for i in range(sch.s):
            ref = quad_weight(sch, i, ck, z)
            assert abs(row[i] - ref) <= 1e-11 * max(1.0, abs(ref))


def test_weight_matrix_shape():
    z = np.linspace(-10, 0, 7)
    assert weight_matrix(gauss(3), 0.5, z).shape == (3, 7)
    assert weight_b(gauss(3), 1, 0.5, z).shape == (7,)


# -- order conditions ----------------------------------------------------------

@pytest.mark.parametrize("sch", [gauss(1), gauss(2), gauss(3), radau_iia(2), radau_iia(3)])
def test_order_conditions_identity_case(sch):
    rep = check_order_conditions(sch, 1.0, 0.0)
    assert max(rep.residuals) <= 1e-14


def test_order_conditions_spec_points():
    assert check_order_conditions(radau_iia(2), 1 / 3, -5.0, tol=1e-12).passed
    assert check_order_conditions(gauss(3), 0.7, 3j, tol=1e-12).passed


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(0.01, 1.0), z=z_strategy)
def test_order_conditions_random(theta, z):
    for sch in (gauss(2), gauss(3), radau_iia(3), make_scheme([0.25, 0.75])):
        assert check_order_conditions(sch, theta, z, tol=1e-11).passed


def test_order_condition_tolerance_validated():
    with pytest.raises(ValueError):
        check_order_conditions(gauss(1), 1.0, 0.0, tol=0.0)
