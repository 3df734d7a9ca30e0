import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from spherekl import specfun as F

unit_x = st.floats(-1.0, 1.0, allow_nan=False)
colat = st.floats(0.0, math.pi, allow_nan=False)
lon = st.floats(0.0, 2 * math.pi, exclude_max=True, allow_nan=False)


# legendre / gegenbauer ------------------------------------------------------


@pytest.mark.parametrize(
    "j, x, expected",
    [
        (0, 0.37, 1.0),
        (0, -1.0, 1.0),
        (2, 1.0, 1.0),
        (2, 0.5, -0.125),
    ],
)
def test_legendre_examples(j, x, expected):
    assert F.legendre_p(j, x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("j", [0, 1, 3, 7, 40, 100])
def test_legendre_matches_scipy(j):
    x = np.linspace(-1, 1, 57)
    assert np.allclose(F.legendre_p(j, x), special.eval_legendre(j, x), atol=1e-13)


def test_legendre_bounded_on_random_pairs():
    rng = np.random.default_rng(0)
    js = rng.integers(0, 101, 10_000)
    xs = rng.uniform(-1, 1, 10_000)
    vals = np.array([F.legendre_p(int(j), x) for j, x in zip(js, xs)])
    assert np.all(np.abs(vals) <= 1 + 1e-13)


def test_legendre_rejects_outside_domain():
    with pytest.raises(F.DomainError):
        F.legendre_p(2, 1.1)
    # rounding slack is clamped, not rejected
    assert F.legendre_p(3, 1 + 1e-13) == pytest.approx(1.0)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
@pytest.mark.parametrize("j", [0, 1, 4, 9])
def test_gegenbauer_is_one_at_one(j, d):
    assert F.gegenbauer_c(j, d, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_gegenbauer_degree_one():
    assert F.gegenbauer_c(1, 3, 0.4) == pytest.approx(0.4, abs=1e-15)


@given(x=unit_x)
def test_gegenbauer_d2_is_legendre(x):
    for j in (0, 1, 4, 11):
        assert abs(F.gegenbauer_c(j, 2, x) - F.legendre_p(j, x)) <= 1e-13


@pytest.mark.parametrize("d", [3, 4, 6])
def test_gegenbauer_matches_scipy_normalized(d):
    x = np.linspace(-1, 1, 31)
    lam = (d - 1) / 2
    for j in range(6):
        ref = special.eval_gegenbauer(j, lam, x) / special.eval_gegenbauer(j, lam, 1.0)
        assert np.allclose(F.gegenbauer_c(j, d, x), ref, atol=1e-12)


def test_gegenbauer_table_rows():
    x = np.array([-0.3, 0.2, 0.9])
    tab = F.gegenbauer_table(6, 3, x)
    assert tab.shape == (3, 7)
    for j in range(7):
        assert np.allclose(tab[:, j], F.gegenbauer_c(j, 3, x), atol=1e-14)


# associated legendre -------------------------------------------------------


@pytest.mark.parametrize("j", [0, 1, 2, 5, 12])
def test_assoc_legendre_m0_is_legendre(j):
    mu = np.linspace(-1, 1, 13)
    assert np.allclose(F.assoc_legendre(j, 0, mu), F.legendre_p(j, mu), atol=1e-12)


@pytest.mark.parametrize("j, m, mu, expected", [(1, 1, 0.0, -1.0), (2, 2, 0.0, 3.0)])
def test_assoc_legendre_examples(j, m, mu, expected):
    assert F.assoc_legendre(j, m, mu) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("j, m", [(3, 1), (4, 2), (6, 5), (10, 3)])
def test_assoc_legendre_matches_scipy(j, m):
    # scipy's lpmv carries the same Condon-Shortley phase
    mu = np.linspace(-0.95, 0.95, 11)
    assert np.allclose(F.assoc_legendre(j, m, mu), special.lpmv(m, j, mu), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize(
    "j, m, mu, expected",
    [(0, 0, 0.3, math.sqrt(4 * math.pi)), (1, 0, 1.0, math.sqrt(4 * math.pi / 3))],
)
def test_norm_assoc_legendre_examples(j, m, mu, expected):
    assert F.norm_assoc_legendre(j, m, mu) == pytest.approx(expected, rel=1e-13)


def test_norm_assoc_legendre_high_order_is_finite():
    v = F.norm_assoc_legendre(150, 150, 0.3)
    assert math.isfinite(v) and v != 0.0


# hermite -------------------------------------------------------------------


@given(u=st.floats(-8, 8))
def test_hermite_base_cases(u):
    assert F.hermite_h(0, u) == 1.0
    assert F.hermite_h(1, u) == pytest.approx(u)


def test_hermite_h2_at_zero():
    assert F.hermite_h(2, 0.0) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("k", [1, 2, 5, 9, 20])
def test_hermite_derivative_identity(k):
    u = np.linspace(-3, 3, 25)
    h = 1e-5
    fd = (F.hermite_h(k, u + h) - F.hermite_h(k, u - h)) / (2 * h)
    assert np.max(np.abs(fd - math.sqrt(k) * F.hermite_h(k - 1, u))) <= 1e-6


@pytest.mark.parametrize("k", [0, 3, 8])
def test_hermite_matches_scipy_hermitenorm(k):
    u = np.linspace(-4, 4, 17)
    ref = special.eval_hermitenorm(k, u) / math.sqrt(math.factorial(k))
    assert np.allclose(F.hermite_h(k, u), ref, rtol=1e-12, atol=1e-12)


def test_hermite_lebesgue_scaling_orthonormal_against_bare_weight():
    x, w = np.polynomial.hermite_e.hermegauss(40)
    H = F.hermite_table(6, x, scaling="lebesgue")
    gram = (H * w[:, None]).T @ H
    assert np.allclose(gram, np.eye(7), atol=1e-12)


def test_hermite_orthonormality():
    rule = F.quadrature("gauss-hermite", 64)
    H = F.hermite_table(30, rule.nodes)
    gram = (H * rule.weights[:, None]).T @ H
    assert np.max(np.abs(gram - np.eye(31))) <= 1e-10


# spherical harmonics -------------------------------------------------------


@given(b1=colat, b2=lon)
def test_sph_harm_low_degree(b1, b2):
    assert F.sph_harm_real(0, 0, b1, b2) == pytest.approx(1 / math.sqrt(4 * math.pi))
    assert F.sph_harm_real(1, 0, b1, b2) == pytest.approx(math.sqrt(3 / (4 * math.pi)) * math.cos(b1), abs=1e-14)


def test_sph_harm_matches_scipy_real_combination():
    b1, b2 = 0.7, 1.9
    for j in range(6):
        for m in range(-j, j + 1):
            # scipy's complex Y includes the Condon-Shortley phase; real part scaled by sqrt(2)
            y = special.sph_harm_y(j, abs(m), b1, b2) if hasattr(special, "sph_harm_y") else special.sph_harm(abs(m), j, b2, b1)
            if m == 0:
                ref = y.real
            elif m > 0:
                ref = math.sqrt(2) * y.real
            else:
                ref = math.sqrt(2) * y.imag
            assert F.sph_harm_real(j, m, b1, b2) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(b1=colat, b2=lon, j=st.integers(0, 60))
def test_addition_formula_property(b1, b2, j):
    total = sum(F.sph_harm_real(j, m, b1, b2) ** 2 for m in range(-j, j + 1))
    assert abs(total - (2 * j + 1) / (4 * math.pi)) <= 1e-9


def test_sph_harm_rejects_bad_order():
    with pytest.raises(F.DomainError):
        F.sph_harm_real(2, 3, 0.1, 0.1)


@pytest.mark.parametrize("j, d, expected", [(0, 2, 1), (0, 7, 1), (5, 2, 11), (2, 3, 9)])
def test_sph_harm_dim(j, d, expected):
    assert F.sph_harm_dim(j, d) == expected


@pytest.mark.parametrize("d, expected", [(1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi**2)])
def test_surface_area(d, expected):
    assert F.surface_area(d) == pytest.approx(expected, rel=1e-14)


# geometry ------------------------------------------------------------------


def test_geodesic_examples():
    p = F.SphereTimePoint(0.4, 1.0, 0.5)
    assert F.geodesic_distance(p, p) == (0.0, 0.0)
    north, south = F.SphereTimePoint(0.0, 0.0, 1.0), F.SphereTimePoint(math.pi, 0.0, 1.0)
    theta, rho = F.geodesic_distance(north, south)
    assert theta == pytest.approx(math.pi) and rho == pytest.approx(math.pi)
    theta, rho = F.geodesic_distance(F.SphereTimePoint(1.0, 2.0, 0.0), F.SphereTimePoint(1.0, 2.0, 2.0))
    assert theta == pytest.approx(0.0, abs=1e-7) and rho == pytest.approx(2.0, abs=1e-7)


@given(a=st.tuples(colat, lon), b=st.tuples(colat, lon), c=st.tuples(colat, lon))
def test_geodesic_symmetric_and_triangle(a, b, c):
    p, q, r = (F.SphereTimePoint(*x) for x in (a, b, c))
    pq = F.geodesic_distance(p, q)[0]
    assert pq == pytest.approx(F.geodesic_distance(q, p)[0], abs=1e-12)
    assert pq <= F.geodesic_distance(p, r)[0] + F.geodesic_distance(r, q)[0] + 1e-7


def test_point_validation():
    with pytest.raises(F.DomainError):
        F.SphereTimePoint(-0.1, 0.0)
    with pytest.raises(F.DomainError):
        F.SphereTimePoint(0.1, 2 * math.pi)


# quadrature ----------------------------------------------------------------


def test_gauss_legendre_single_node():
    rule = F.quadrature("gauss-legendre", 1)
    assert rule.nodes.tolist() == [0.0] and rule.weights.tolist() == [2.0]


def test_gauss_legendre_exactness():
    rule = F.quadrature("gauss-legendre", 32)
    assert rule.integrate(lambda x: x**10) == pytest.approx(2 / 11, abs=1e-12)
    assert rule.integrate(lambda x: x**62) == pytest.approx(2 / 63, abs=1e-12)


def test_gauss_hermite_second_moment():
    rule = F.quadrature("gauss-hermite", 20)
    assert rule.integrate(lambda u: u * u) == pytest.approx(1.0, abs=1e-12)
    assert rule.integrate(np.ones_like) == pytest.approx(1.0, abs=1e-12)


def test_quadrature_rejects_bad_input():
    with pytest.raises(ValueError):
        F.quadrature("gauss-legendre", 0)
    with pytest.raises(ValueError):
        F.quadrature("simpson", 5)


def test_jacobi_rule_integrates_weight():
    rule = F.jacobi_rule(12, 3)
    # int (1 - x^2)^{1/2} dx = pi / 2
    assert rule.integrate(np.ones_like) == pytest.approx(math.pi / 2, rel=1e-12)


@pytest.mark.parametrize("J, expected", [(0, 64), (24, 64), (25, 66), (150, 316)])
def test_default_node_counts(J, expected):
    assert F.default_legendre_nodes(J) == expected
    assert F.default_hermite_nodes(J) == expected


def test_spherical_orthonormality_small():
    nb, nl = 40, 80
    g = F.quadrature("gauss-legendre", nb)
    b1 = np.arccos(g.nodes)
    b2 = 2 * math.pi * np.arange(nl) / nl
    B1, B2 = np.meshgrid(b1, b2, indexing="ij")
    w = np.outer(g.weights, np.full(nl, 2 * math.pi / nl)).ravel()
    labels = [(j, m) for j in range(8) for m in range(-j, j + 1)]
    Y = np.array([np.asarray(F.sph_harm_real(j, m, B1, B2)).ravel() for j, m in labels])
    gram = (Y * w) @ Y.T
    assert np.max(np.abs(gram - np.eye(len(labels)))) <= 1e-12
