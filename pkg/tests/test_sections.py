from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from geotomo.bodies import Ball, direction, make_counterexample_body, superellipse_body, volume
from geotomo.errors import DomainError
from geotomo.sections import (
    SectionProfile,
    axial_section,
    central_section,
    counterexample_section_at_zero,
    counterexample_section_curvature,
    radial_integral,
    second_derivative_available,
    section_value,
)
from geotomo.specfun import sphere_area


def test_ball_disk_area():
    assert section_value(Ball(3), direction(3, 0.4), 0.0, 0.5) == pytest.approx(0.75 * math.pi, rel=1e-13)


def test_ball_central_section_n5():
    # volume of the unit 4-ball
    assert central_section(Ball(5), 0.7) == pytest.approx(math.pi**2 / 2, rel=1e-13)


@pytest.mark.parametrize("psi", [0.0, 0.7, math.pi / 2])
def test_ball_weighted_section(psi):
    n, p, t = 5, -0.5, 0.3
    R = math.sqrt(1 - t * t)
    exact = sphere_area(n - 2) * integrate.quad(lambda r: r ** (n - 2) * (r * r + t * t) ** (p / 2), 0, R, epsabs=0, epsrel=1e-13)[0]
    assert section_value(Ball(n), psi, p, t) == pytest.approx(exact, rel=1e-11)


def test_radial_integral_matches_quadrature():
    n, p = 6, 0.7
    for R, t in [(0.8, 0.1), (2.0, 1.5), (0.5, 0.0)]:
        exact = integrate.quad(lambda r: r ** (n - 2) * (r * r + t * t) ** (p / 2), 0, R, epsrel=1e-13)[0]
        assert radial_integral(np.array([R]), np.array([t]), n, p)[0] == pytest.approx(exact, rel=1e-11)


def test_axial_and_general_agree():
    body = make_counterexample_body(5, -0.5, 100.0)
    t = np.linspace(0, body.half_height * 0.99, 9)
    axial = SectionProfile(body, 0.0, -0.5, method="axial")(t)
    general = SectionProfile(body, 0.0, -0.5, method="general")(t)
    np.testing.assert_allclose(general, axial, rtol=1e-11, atol=1e-13)


def test_section_integrates_to_volume():
    body = superellipse_body(4, 0.8, 1.1, 3.0, 1.5)
    prof = SectionProfile(body, 0.6, 0.0)
    vol = integrate.quad(lambda t: prof(np.array([t]))[0], 0, prof.t_max, epsrel=1e-10, limit=200)[0]
    assert 2 * vol == pytest.approx(volume(body), rel=1e-7)


def test_closed_forms_against_profile():
    n, p = 5, -0.5
    body = make_counterexample_body(n, p, 1e6)
    prof = SectionProfile(body, 0.0, p, method="axial")
    assert prof.value_at_zero == pytest.approx(counterexample_section_at_zero(n, p), rel=1e-12)
    assert prof.second_derivative_numeric() == pytest.approx(counterexample_section_curvature(n, p), rel=1e-5)


def test_second_derivative_availability():
    assert second_derivative_available(5, -1.5)
    assert not second_derivative_available(5, -2.5)
    assert second_derivative_available(3, 0.0)
    prof = SectionProfile(Ball(5), 0.0, -2.5)
    with pytest.raises(DomainError, match="-n\\+3"):
        prof.second_derivative


def test_profile_guards():
    with pytest.raises(DomainError):
        SectionProfile(Ball(2), 0.0)
    with pytest.raises(DomainError, match="-n\\+1"):
        SectionProfile(Ball(4), 0.0, -3.0)
    with pytest.raises(DomainError):
        SectionProfile(Ball(4), 0.3, 0.0, method="axial")


def test_axial_section_helper():
    body = make_counterexample_body(5, 0.0, 1.0)
    t = np.array([0.0, 0.2])
    np.testing.assert_allclose(axial_section(body, 0.0, t), SectionProfile(body, 0.0)(t), rtol=1e-14)


def test_stable_remainder_matches_subtraction():
    body = make_counterexample_body(5, -0.5, 1e3)
    prof = SectionProfile(body, 0.0, -0.5)
    t = np.array([0.05, 0.1, 0.2])
    a0, _, a2 = prof.taylor
    np.testing.assert_allclose(prof.remainder(t, 3), prof(t) - a0 - a2 * t**2 / 2, rtol=1e-8)


@settings(max_examples=8, deadline=None)
@given(
    st.integers(3, 5),
    st.floats(0.4, 1.5),
    st.floats(0.4, 1.5),
    st.floats(1.0, 4.0),
    st.floats(1.0, 3.0),
    st.floats(0.0, math.pi / 2),
    st.sampled_from([0.0, -0.25, -0.5]),
)
def test_central_section_is_maximal(n, a, b, r, s, psi, p):
    prof = SectionProfile(superellipse_body(n, a, b, r, s), psi, p)
    vals = prof(np.linspace(0, prof.t_max, 24))
    assert np.all(vals <= vals[0] * (1 + 1e-8))
