from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geotomo.bodies import (
    Ball,
    CounterexampleFamily,
    Exponents,
    PerturbedBody,
    ScaledBody,
    TabulatedBody,
    check_convexity,
    check_derivative_domain,
    direction,
    direction_angle,
    make_counterexample_body,
    superellipse_body,
    support_halfwidth,
    support_value,
    volume,
    volume_polar,
)
from geotomo.errors import DomainError

HALF_HEIGHT_N1 = 0.786151377757423  # sqrt(2/(1+sqrt 5))
VOLUME_N5_P_MINUS_HALF_N1E4 = 0.770154866156599  # mpmath, dps 30


def test_exponents_from_alpha():
    ex = Exponents.from_alpha(5, 0.5)
    assert (ex.order, ex.power, ex.laplacian_order, ex.floor_order) == (2.5, -0.5, 0.5, 2)


def test_derivative_domain_guards():
    check_derivative_domain(5, -0.5, 2.5)
    with pytest.raises(DomainError, match="-n\\+\\[q\\]\\+2"):
        check_derivative_domain(5, -1.5, 2.5)
    with pytest.raises(DomainError, match="-n\\+1"):
        check_derivative_domain(3, -2.0, 0.5)
    with pytest.raises(DomainError, match="exceed -1"):
        check_derivative_domain(5, 0.0, -1.0)


def test_direction_angle_folds():
    assert direction_angle(direction(4, 0.3)) == pytest.approx(0.3)
    assert direction_angle(direction(4, math.pi - 0.3)) == pytest.approx(0.3)
    with pytest.raises(DomainError, match="unit vector"):
        direction_angle(np.array([0.0, 0.0, 2.0]))
    with pytest.raises(DomainError, match="dimension"):
        direction_angle(direction(3, 0.1), 4)


def test_ball_basics():
    b = Ball(5, 2.0)
    assert b.radial(direction(5, 0.4)) == pytest.approx(2.0)
    assert b.minkowski_norm(np.array([0, 0, 0, 0, 1.0])) == pytest.approx(0.5)
    assert volume(b) == pytest.approx(8 * math.pi**2 / 15 * 32, rel=1e-14)
    assert volume_polar(b) == pytest.approx(volume(b), rel=1e-12)


def test_counterexample_half_height_closed_form():
    fam = CounterexampleFamily(5, -0.5, 1.0)
    assert fam.half_height == pytest.approx(HALF_HEIGHT_N1, rel=1e-15)
    assert fam.base(fam.half_height) == pytest.approx(0.0, abs=1e-15)


def test_counterexample_volume_oracle():
    body = make_counterexample_body(5, -0.5, 1e4)
    assert volume(body) == pytest.approx(VOLUME_N5_P_MINUS_HALF_N1E4, rel=1e-10)
    assert volume_polar(body) == pytest.approx(VOLUME_N5_P_MINUS_HALF_N1E4, rel=1e-9)


def test_counterexample_is_convex():
    for N in (1.0, 1e3, 1e8):
        cert = check_convexity(make_counterexample_body(5, -0.5, N))
        assert cert.passed, cert


def test_ball_and_superellipse_convex():
    assert check_convexity(Ball(4)).passed
    assert check_convexity(superellipse_body(4, 0.7, 1.3, 3.0, 2.0)).passed


def test_dented_body_fails_convexity():
    phi = np.linspace(0, math.pi / 2, 91)
    r = 1.0 - 0.05 * np.exp(-(((phi - 0.8) / 0.15) ** 2))
    cert = check_convexity(TabulatedBody(4, phi, r))
    assert not cert.passed
    assert min(abs(cert.location - 0.8), abs(cert.location - (math.pi - 0.8))) < 0.1


def test_support_function():
    assert support_value(Ball(3, 1.5), direction(3, 0.9)) == pytest.approx(1.5, rel=1e-12)
    body = make_counterexample_body(5, -0.5, 10.0)
    sp = support_halfwidth(body, direction(5, 0.0))
    assert sp.value == pytest.approx(body.half_height, rel=1e-9)
    box_like = superellipse_body(3, 0.5, 2.0, 8.0, 1.0)
    assert support_value(box_like, 0.0) == pytest.approx(0.5, rel=1e-6)
    assert support_value(box_like, math.pi / 2) == pytest.approx(2.0, rel=1e-6)


def test_tabulated_csv_roundtrip(tmp_path):
    phi = np.linspace(0, math.pi / 2, 33)
    path = tmp_path / "ball.csv"
    path.write_text("angle_rad,rho\n" + "".join(f"{float(a)!r},1.2\n" for a in phi))
    body = TabulatedBody.from_csv(path, 4)
    assert body.radial_angle(np.array([0.3, 2.0])) == pytest.approx([1.2, 1.2])
    assert volume(body) == pytest.approx(volume(Ball(4, 1.2)), rel=1e-9)


def test_tabulated_rejects_bad_grid():
    with pytest.raises(DomainError):
        TabulatedBody(3, [0.1, 0.5, 1.0], [1, 1, 1])


def test_perturbed_body():
    base = Ball(4)
    with pytest.raises(DomainError):
        PerturbedBody(base, lambda phi: np.cos(phi) ** 2, 0.0)
    with pytest.raises(DomainError, match="not positive"):
        PerturbedBody(base, lambda phi: -np.cos(phi) ** 2, 2.0)
    body = PerturbedBody(base, lambda phi: np.cos(phi) ** 2, 0.1)
    assert body.radial_power(np.array([0.0]))[0] == pytest.approx(1.1)
    assert body.radial_angle(np.array([math.pi]))[0] == pytest.approx(1.1 ** (1 / 3))


def test_scaled_body_volume():
    body = ScaledBody(make_counterexample_body(5, -0.5, 10.0), 1.3)
    assert volume(body) == pytest.approx(1.3**5 * volume(body.base), rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(
    st.integers(3, 6),
    st.floats(0.3, 2.0),
    st.floats(0.3, 2.0),
    st.floats(1.0, 5.0),
    st.floats(1.0, 4.0),
)
def test_superellipse_volume_routes_agree(n, a, b, r, s):
    body = superellipse_body(n, a, b, r, s)
    assert volume(body) == pytest.approx(volume_polar(body), rel=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, math.pi / 2), st.floats(0.5, 3.0))
def test_radial_boundary_is_on_body(phi, scale):
    body = superellipse_body(4, scale, 1.0, 2.5, 1.5)
    r = float(body.radial_angle(np.array([phi]))[0])
    s, z = r * math.sin(phi), r * math.cos(phi)
    assert body.contains_sz(0.999 * s, 0.999 * z)
    assert not body.contains_sz(1.001 * s, 1.001 * z)
