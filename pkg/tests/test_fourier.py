from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geotomo.bodies import Ball, PerturbedBody, direction, make_counterexample_body
from geotomo.errors import DomainError
from geotomo.fourier import (
    SphericalFunction,
    axisym_homogeneous_ft,
    frac_laplacian_grid,
    frac_laplacian_section,
    multiplier,
    parseval_sphere_check,
    radial_power_expansion,
    third_order_integral,
    transform_via_harmonics,
    transform_via_sections,
    transform_via_sphere,
)
from geotomo.specfun import gamma

MULT_M0_N5_QM05 = 79.1661742438180738  # 2^0.5 pi^2.5 Gamma(0.25)/Gamma(2.25), mpmath


def riesz(n, q):
    return 2 ** (q + 1) * math.pi ** (n / 2) * gamma((q + 1) / 2) / gamma((n - q - 1) / 2)


def test_multiplier_oracle():
    assert multiplier(0, -0.5, 5) == pytest.approx(MULT_M0_N5_QM05, rel=1e-13)


def test_multiplier_sign_alternates():
    vals = multiplier(np.arange(0, 12, 2), 0.5, 5)
    assert np.all(np.sign(vals) == [1, -1, 1, -1, 1, -1])


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_double_transform_is_2pi_to_n(n):
    m = np.arange(0, 40, 2)
    for q in (-0.7, 0.3, 1.5, n - 1.6):
        prod = multiplier(m, q, n) * multiplier(m, n - 2 - q, n)
        np.testing.assert_allclose(prod, (2 * math.pi) ** n, rtol=1e-12)


def test_multiplier_range_guard():
    with pytest.raises(DomainError, match="n-1"):
        multiplier(0, 4.0, 5)


@pytest.mark.parametrize("q", [-0.75, -0.25])
@pytest.mark.parametrize("n", [4, 5])
def test_three_routes_on_ball(n, q):
    ball = Ball(n)
    exact = riesz(n, q)
    for route in (transform_via_sections, transform_via_sphere, transform_via_harmonics):
        assert route(ball, 0.6, 0.0, q) == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("psi", [0.0, 1.2])
def test_three_routes_on_counterexample(psi):
    body = make_counterexample_body(5, -0.5, 100.0)
    a = transform_via_sections(body, psi, -0.5, -0.25)
    b = transform_via_sphere(body, psi, -0.5, -0.25)
    c = transform_via_harmonics(body, psi, -0.5, -0.25)
    assert b == pytest.approx(a, rel=1e-8)
    assert c == pytest.approx(a, rel=1e-8)


def test_sphere_route_guard():
    with pytest.raises(DomainError, match="-1 < q < 0"):
        transform_via_sphere(Ball(4), 0.0, 0.0, 0.5)


def test_odd_order_refused_by_sections_route():
    with pytest.raises(DomainError, match="third_order_integral"):
        transform_via_sections(Ball(5), 0.0, 0.0, 3.0)


def test_third_order_ball():
    res = third_order_integral(Ball(5), direction(5, 0.2))
    assert res.value == pytest.approx(4 * math.pi**2 / 3, rel=1e-5)
    assert res.sign == "positive"
    with pytest.raises(DomainError):
        third_order_integral(Ball(5), 0.0, power=-0.5)


def test_third_order_flat_body_negative():
    assert third_order_integral(make_counterexample_body(5, 0.0, 1e4), 0.0).sign == "negative"


def test_sign_chain_for_negative_part():
    # n=5, q in (2,3): integral < 0 iff derivative > 0 iff transform < 0
    from geotomo.fracderiv import frac_deriv_at_zero, regularized_integral
    from geotomo.sections import SectionProfile

    for N in (1.0, 1e4):
        body = make_counterexample_body(5, -0.5, N)
        prof = SectionProfile(body, 0.0, -0.5)
        integral = regularized_integral(prof, 2.5).value
        deriv = frac_deriv_at_zero(prof, 2.5).value
        transform = transform_via_sections(body, 0.0, -0.5, 2.5)
        assert (integral < 0) == (deriv > 0) == (transform < 0)


def test_laplacian_routes_agree():
    body = make_counterexample_body(5, -0.5, 10.0)
    for psi in (0.0, 0.9):
        h = frac_laplacian_section(body, -0.5, psi, "harmonics")
        s = frac_laplacian_section(body, -0.5, psi, "sections")
        assert s == pytest.approx(h, rel=1e-7)


def test_laplacian_order_zero_is_section():
    from geotomo.sections import central_section

    body = make_counterexample_body(4, 0.0, 3.0)
    assert frac_laplacian_section(body, 0.0, 0.5) == pytest.approx(central_section(body, 0.5), rel=1e-9)


def test_laplacian_guards():
    with pytest.raises(DomainError, match="n >= 4"):
        frac_laplacian_section(Ball(3), 0.0, 0.0)
    with pytest.raises(DomainError):
        frac_laplacian_grid(Ball(5), 2.0, [0.0])


def test_laplacian_linear_in_perturbation():
    base = make_counterexample_body(5, -0.5, 10.0)
    pert = SphericalFunction(5, [0.0, 0.0, 0.3, 0.0, -0.1])
    angle = 0.4
    alpha = 0.5
    base_val = frac_laplacian_grid(base, alpha, [angle])[0]
    slope = axisym_homogeneous_ft(pert, 5 - alpha - 4)(np.array([angle]))[0] / (math.pi * 4)
    for eps in (1e-2, 1e-3):
        body = PerturbedBody(base, pert, eps)
        diff = (frac_laplacian_grid(body, alpha, [angle], degree=64)[0] - base_val) / eps
        assert diff == pytest.approx(slope, rel=1e-6)


def test_expansion_reproduces_function():
    body = make_counterexample_body(5, -0.5, 10.0)
    sf = radial_power_expansion(body, 4.0)
    phi = np.linspace(0, math.pi / 2, 7)
    np.testing.assert_allclose(sf(phi), body.radial_angle(phi) ** 4, rtol=2e-6)


def test_parseval_single_mode():
    f = SphericalFunction(5, [1.0])
    lhs, rhs = parseval_sphere_check(f, f, -2.0, -3.0)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_parseval_orthogonal_modes():
    f = SphericalFunction(5, [1.0, 0.0, 0.5])
    g = SphericalFunction(5, [0.0, 0.0, 0.0, 0.0, 1.0])
    lhs, rhs = parseval_sphere_check(f, g, -2.0, -3.0)
    assert abs(lhs) < 1e-9 * abs(multiplier(0, 1.0, 5)) and abs(rhs) < 1e-9


def test_parseval_degree_guard():
    f = SphericalFunction(4, [1.0])
    with pytest.raises(DomainError, match="-n"):
        parseval_sphere_check(f, f, -1.0, -1.0)


@settings(max_examples=20, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=1, max_size=10),
    st.lists(st.floats(-1, 1), min_size=1, max_size=10),
    st.floats(-2.9, -1.1),
)
def test_parseval_random(cf, cg, deg_f):
    n = 5
    f, g = SphericalFunction(n, cf), SphericalFunction(n, cg)
    lhs, rhs = parseval_sphere_check(f, g, deg_f, -n - deg_f)
    scale = (2 * math.pi) ** n * max(1.0, float(np.abs(f.coeffs).sum() * np.abs(g.coeffs).sum()))
    assert abs(lhs - rhs) <= 1e-8 * max(abs(rhs), 1e-3 * scale)
