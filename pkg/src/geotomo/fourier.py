"""Fourier transforms of even homogeneous functions on R^n.

Even axisymmetric functions on the sphere are expanded in Gegenbauer
polynomials C_m^lam(cos phi), lam = (n-2)/2, even m only.  The transform of
r^(-n+q+1) v(theta) is r^(-q-1) g(theta), with g obtained from v by a
diagonal multiplier on the coefficients.  Transforms of
||x||^(-n-p+q+1) |x|^p can also be computed from fractional derivatives of
weighted section functions, or from a direct spherical integral when
-1 < q < 0.  Cross-checking these routes is the main test of the machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .bodies import ConvexBody, PerturbedBody, check_derivative_domain, direction_angle
from .errors import DomainError
from .fracderiv import INTEGER_GAP, frac_deriv_at_zero, integer_deriv_at_zero, regularized_integral
from .sections import SectionProfile, central_section
from .specfun import gauss_gegenbauer, gauss_legendre, gegenbauer_norm, gegenbauer_table, integrate_adaptive, sphere_area

__all__ = [
    "SphericalFunction",
    "multiplier",
    "axisym_homogeneous_ft",
    "radial_power_expansion",
    "transform_via_sections",
    "transform_via_sphere",
    "transform_via_harmonics",
    "third_order_integral",
    "ThirdOrderResult",
    "frac_laplacian_section",
    "frac_laplacian_grid",
    "parseval_sphere_check",
    "MAX_POWER",
]

# weights |x|^p with p above this are not supported by the section route
MAX_POWER = 2.0
DEFAULT_DEGREE = 32
MAX_DEGREE = 256
TAIL_TOL = 1e-8


class SphericalFunction:
    """Even zonal function sum_m c_m C_m^lam(cos phi) on S^(n-1).

    ``coeffs`` has length M + 1 with odd entries zero.  ``converged`` records
    whether an adaptive expansion met its tail test.
    """

    def __init__(self, n: int, coeffs, converged: bool = True):
        if n < 3:
            raise DomainError("spherical expansions need n >= 3")
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise DomainError("coefficients must be a non-empty 1-D array")
        c[1::2] = 0.0
        self.n = int(n)
        self.coeffs = c
        self.converged = converged
        c.setflags(write=False)

    @property
    def lam(self) -> float:
        return (self.n - 2) / 2.0

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, phi) -> np.ndarray:
        x = np.cos(np.asarray(phi, dtype=float))
        return np.tensordot(self.coeffs, gegenbauer_table(self.degree, self.lam, x), axes=1)

    def with_degree(self, degree: int) -> "SphericalFunction":
        c = np.zeros(degree + 1)
        k = min(degree, self.degree) + 1
        c[:k] = self.coeffs[:k]
        return SphericalFunction(self.n, c, self.converged)

    def scaled(self, factor: float) -> "SphericalFunction":
        return SphericalFunction(self.n, factor * self.coeffs, self.converged)

    def tail_ratio(self) -> float:
        c = np.abs(self.coeffs)
        top = float(c.max())
        if top == 0.0:
            return 0.0
        last = c[-4:] if self.degree >= 3 else c
        return float(last.max()) / top

    def inner(self, other: "SphericalFunction") -> float:
        """Integral of the product over S^(n-1)."""
        if other.n != self.n:
            raise DomainError("dimension mismatch")
        M = min(self.degree, other.degree)
        h = gegenbauer_norm(M, self.lam)
        return sphere_area(self.n - 2) * float(np.sum(self.coeffs[: M + 1] * other.coeffs[: M + 1] * h))

    @classmethod
    def from_function(cls, func: Callable, n: int, degree: int) -> "SphericalFunction":
        """Project ``func(phi)`` onto even Gegenbauer modes up to ``degree``."""
        if degree < 0:
            raise DomainError("degree must be non-negative")
        lam = (n - 2) / 2.0
        x, w = gauss_gegenbauer(2 * (degree + 1), lam)
        vals = np.asarray(func(np.arccos(x)), dtype=float)
        table = gegenbauer_table(degree, lam, x)
        coeffs = table @ (w * vals) / gegenbauer_norm(degree, lam)
        return cls(n, coeffs)

    @classmethod
    def adaptive(
        cls, func: Callable, n: int, start: int = DEFAULT_DEGREE, max_degree: int = MAX_DEGREE, tol: float = TAIL_TOL
    ) -> "SphericalFunction":
        """Expand with degree doubling until the trailing coefficients drop below ``tol``."""
        degree = start
        while True:
            sf = cls.from_function(func, n, degree)
            if sf.tail_ratio() <= tol:
                return sf
            if degree >= max_degree:
                return cls(n, sf.coeffs, converged=False)
            degree = min(2 * degree, max_degree)


def multiplier(degree, q: float, n: int) -> np.ndarray:
    """Transform multiplier for the Gegenbauer mode of even ``degree``.

    r^(-n+q+1) C_m(cos phi) has transform r^(-q-1) times this factor times the
    same mode.
    """
    m = np.asarray(degree, dtype=float)
    if not -1.0 < q < n - 1.0:
        raise DomainError(f"q must lie in (-1, n-1) for the homogeneous transform (got q={q:g}, n={n})")
    a = (m + q + 1.0) / 2.0
    b = (m + n - q - 1.0) / 2.0
    sign = np.where(np.mod(m, 4) == 2, -1.0, 1.0)
    with np.errstate(over="ignore"):
        val = np.exp((q + 1.0) * math.log(2.0) + n / 2 * math.log(math.pi) + special.gammaln(a) - special.gammaln(b))
    # b hits a pole only when q = n - 1 + 2k, excluded above
    return sign * val


def axisym_homogeneous_ft(v: SphericalFunction, q: float) -> SphericalFunction:
    """Spherical part of the transform of r^(-n+q+1) v(theta)."""
    m = np.arange(v.degree + 1)
    return SphericalFunction(v.n, multiplier(m, q, v.n) * v.coeffs, v.converged)


def radial_power_expansion(body: ConvexBody, exponent: float, degree: int | None = None) -> SphericalFunction:
    """Expansion of rho^exponent; ``degree=None`` selects it adaptively."""
    n = body.n
    if isinstance(body, PerturbedBody) and exponent == n - 1:
        func = body.radial_power
    else:
        def func(phi):
            return body.radial_angle(phi) ** exponent
    if degree is None:
        return SphericalFunction.adaptive(func, n)
    return SphericalFunction.from_function(func, n, degree)


# ------------------------------------------------------------ three routes


def _check_transform_args(n: int, power: float, q: float) -> None:
    if q <= -1.0:
        raise DomainError(f"q must exceed -1 (got q={q:g})")
    if abs(q - (n + power - 1.0)) < 1e-12:
        raise DomainError("q must differ from n+p-1")
    if power > MAX_POWER:
        raise DomainError(f"p must not exceed {MAX_POWER:g} for the section route (got p={power:g})")


def transform_via_sections(body: ConvexBody, xi, power: float, q: float, rel_tol: float = 1e-10) -> float:
    """(||x||^(-n-p+q+1) |x|^p)^ at xi = pi (n+p-q-1) / cos(pi q/2) * A^(q)(0)."""
    n = body.n
    _check_transform_args(n, power, q)
    c = math.cos(math.pi * q / 2)
    if abs(c) <= 1e-8:
        raise DomainError(f"cos(pi q/2) vanishes at q={q:g}; use third_order_integral for the sign")
    prof = SectionProfile(body, xi, power)
    k = round(q)
    if q == k:
        deriv = integer_deriv_at_zero(prof, k)
    else:
        if abs(q - k) < INTEGER_GAP:
            raise DomainError(f"q={q:g} is too close to the integer {k}")
        check_derivative_domain(n, power, q)
        deriv = frac_deriv_at_zero(prof, q, rel_tol).value
    return math.pi * (n + power - q - 1.0) / c * deriv


def transform_via_sphere(body: ConvexBody, xi, power: float, q: float, rel_tol: float = 1e-10, chi_nodes: int = 96) -> float:
    """Same transform from the direct spherical integral, valid for -1 < q < 0.

    pi / (2 Gamma(-q) cos(pi q/2)) * int_S |<theta, xi>|^(-q-1) rho^(n+p-q-1) dtheta
    """
    n = body.n
    if not -1.0 < q < 0.0:
        raise DomainError(f"the spherical route needs -1 < q < 0 (got q={q:g})")
    _check_transform_args(n, power, q)
    psi = float(xi) if np.ndim(xi) == 0 else direction_angle(xi, n)
    expo = n + power - q - 1.0
    cpsi, spsi = math.cos(psi), math.sin(psi)
    chi, wchi = gauss_legendre(chi_nodes, 0.0, math.pi)
    if n > 3:
        wchi = wchi * np.sin(chi) ** (n - 3)
    wchi = wchi * (sphere_area(n - 2) / sphere_area(n - 3)) / wchi.sum()
    cchi = np.cos(chi)
    inv = -1.0 / q

    def integrand(s):
        # u = cos(tau) = s^(1/|q|) absorbs the u^(-q-1) singularity
        u = s**inv
        sin_tau = np.sqrt(np.maximum(1.0 - u * u, 0.0))
        cosphi = u[:, None] * cpsi + sin_tau[:, None] * spsi * cchi[None, :]
        phi = np.arccos(np.clip(cosphi, -1.0, 1.0))
        inner = (body.radial_angle(phi) ** expo) @ wchi
        return sin_tau ** (n - 3) * inner

    res = integrate_adaptive(integrand, 0.0, 1.0, rel_tol=rel_tol, singular=(True, n == 4))
    sphere_integral = 2.0 * sphere_area(n - 3) * inv * res.value
    return math.pi / (2.0 * special.gamma(-q) * math.cos(math.pi * q / 2)) * sphere_integral


def transform_via_harmonics(body: ConvexBody, xi, power: float, q: float, degree: int | None = None) -> float:
    """Same transform via the Gegenbauer multiplier applied to rho^(n+p-q-1)."""
    n = body.n
    psi = float(xi) if np.ndim(xi) == 0 else direction_angle(xi, n)
    if abs(q - (n + power - 1.0)) < 1e-12:
        raise DomainError("q must differ from n+p-1")
    v = radial_power_expansion(body, n + power - q - 1.0, degree)
    return float(axisym_homogeneous_ft(v, q)(np.array([psi]))[0])


@dataclass(frozen=True)
class ThirdOrderResult:
    """Regularized integral at order 3 and its sign.

    The transform at q = 3 is a positive multiple of ``value``.
    """

    value: float
    sign: str
    abs_error: float


def third_order_integral(body: ConvexBody, xi, power: float | None = None, rel_tol: float = 1e-10, tol: float = 1e-9) -> ThirdOrderResult:
    """int_0^inf t^-4 (A(t) - A(0) - A''(0) t^2/2) dt for the weight p = -n+5."""
    n = body.n
    if power is None:
        power = -n + 5.0
    if power != -n + 5.0:
        raise DomainError(f"the order-3 integral uses p = -n+5 (got p={power:g})")
    prof = SectionProfile(body, xi, power)
    res = regularized_integral(prof, 3.0, rel_tol)
    v = res.value
    margin = max(tol, res.abs_error_estimate)
    sign = "negative" if v < -margin else "positive" if v > margin else "zero-inconclusive"
    return ThirdOrderResult(v, sign, res.abs_error_estimate)


# ------------------------------------------------------------ Laplacian


def _laplacian_order(n: int, alpha: float) -> float:
    if n < 4:
        raise DomainError("the Laplacian of the section function needs n >= 4")
    order = n - alpha - 4.0
    if not -1.0 < order < n - 1.0:
        raise DomainError(f"n-alpha-4 must lie in (-1, n-1) (got {order:g} for n={n}, alpha={alpha:g})")
    return order


def frac_laplacian_grid(body: ConvexBody, alpha: float, angles, degree: int | None = None) -> np.ndarray:
    """(-Delta)^((n-alpha-4)/2) S_K at the polar angles ``angles``."""
    n = body.n
    order = _laplacian_order(n, alpha)
    v = radial_power_expansion(body, n - 1.0, degree)
    g = axisym_homogeneous_ft(v, order)
    return g(np.asarray(angles, dtype=float)) / (math.pi * (n - 1))


def frac_laplacian_section(body: ConvexBody, alpha: float, xi, method: str = "harmonics", degree: int | None = None) -> float:
    """(-Delta)^((n-alpha-4)/2) S_K at one direction.

    ``method="harmonics"`` applies the Gegenbauer multiplier to rho^(n-1).
    ``method="sections"`` uses the derivative of order q' = n-alpha-4 of the
    section function with weight |x|^q' and divides by cos(pi q'/2).
    """
    n = body.n
    order = _laplacian_order(n, alpha)
    psi = float(xi) if np.ndim(xi) == 0 else direction_angle(xi, n)
    if method == "harmonics":
        return float(frac_laplacian_grid(body, alpha, [psi], degree)[0])
    if method != "sections":
        raise DomainError(f"unknown method {method!r}")
    if order == 0.0:
        return central_section(body, psi)
    if order >= 3.0:
        raise DomainError(f"the section route needs n-alpha-4 < 3 (got {order:g})")
    value = transform_via_sections(body, psi, order, order)
    return value / (math.pi * (n - 1))


# ------------------------------------------------------------ Parseval


def parseval_sphere_check(f: SphericalFunction, g: SphericalFunction, deg_f: float, deg_g: float, nodes: int | None = None) -> tuple[float, float]:
    """Both sides of int f^ g^ = (2 pi)^n int f g for complementary degrees.

    ``f`` and ``g`` are spherical parts of even functions homogeneous of
    degrees ``deg_f`` and ``deg_g`` with deg_f + deg_g = -n.  Both sides
    are evaluated by Gauss-Gegenbauer quadrature of sampled values.
    """
    n = f.n
    if g.n != n:
        raise DomainError("dimension mismatch")
    if abs(deg_f + deg_g + n) > 1e-12:
        raise DomainError(f"degrees must sum to -n (got {deg_f:g} + {deg_g:g}, n={n})")
    qf = deg_f + n - 1.0
    qg = deg_g + n - 1.0
    ft, gt = axisym_homogeneous_ft(f, qf), axisym_homogeneous_ft(g, qg)
    lam = (n - 2) / 2.0
    count = nodes or (f.degree + g.degree) // 2 + 2
    x, w = gauss_gegenbauer(count, lam)
    phi = np.arccos(x)
    area = sphere_area(n - 2)
    lhs = area * float(np.sum(w * ft(phi) * gt(phi)))
    rhs = (2.0 * math.pi) ** n * area * float(np.sum(w * f(phi) * g(phi)))
    return lhs, rhs
