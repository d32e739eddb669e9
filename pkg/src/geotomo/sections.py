"""Weighted parallel section functions.

For a body K, a unit direction xi and a weight exponent p the section
function is

    A(t) = integral over K intersected with {<x, xi> = t} of |x|^p dx.

Sections are parametrized by a centre c in the hyperplane and polar
coordinates (r, theta) around it, theta ranging over the unit sphere of the
hyperplane.  For axisymmetric bodies the integrand depends on theta only
through the angle beta between theta and the in-plane component of e_n, so
the (n-1)-dimensional integral reduces to one angle, one radius and a
bisection for the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .bodies import Ball, ConvexBody, ProfileBody, _support_angle, direction, direction_angle
from .errors import DomainError
from .specfun import gauss_legendre, sphere_area

__all__ = [
    "SectionProfile",
    "radial_integral",
    "section_value",
    "central_section",
    "axial_section",
    "build_profile",
    "counterexample_section_at_zero",
    "counterexample_section_curvature",
    "second_derivative_available",
]

_BISECT_STEPS = 64
_RADIAL_NODES = 48


def radial_integral(R, t, n: int, power: float) -> np.ndarray:
    """int_0^R (t^2 + r^2)^(p/2) r^(n-2) dr in closed form."""
    R = np.asarray(R, dtype=float)
    t = np.abs(np.asarray(t, dtype=float))
    R, t = np.broadcast_arrays(R, t)
    gam = n + power - 1.0
    if power == 0.0:
        return R ** (n - 1) / (n - 1)
    out = np.zeros(R.shape)
    zero_t = t == 0.0
    out[zero_t] = R[zero_t] ** gam / gam
    m = ~zero_t & (R > 0)
    if np.any(m):
        Rm, tm = R[m], t[m]
        s2 = tm * tm + Rm * Rm
        z = Rm * Rm / s2
        out[m] = Rm ** (n - 1) * s2 ** (power / 2) / (n - 1) * special.hyp2f1(-power / 2, 1.0, (n + 1) / 2, z)
    return out


def second_derivative_available(n: int, power: float) -> bool:
    """Whether A is twice differentiable at 0 for generic smooth bodies."""
    return power > 3.0 - n or (power >= 0 and power == 2 * round(power / 2))


def counterexample_section_at_zero(n: int, power: float) -> float:
    """Central weighted section of the counterexample family on its axis."""
    gam = n + power - 1.0
    if gam <= 0:
        raise DomainError("n+p-1 must be positive")
    return sphere_area(n - 2) / gam


def counterexample_section_curvature(n: int, power: float) -> float:
    """Second derivative at 0 of the axial section of the counterexample family."""
    if not power > 3.0 - n and power != 0.0:
        raise DomainError(f"p must exceed -n+3 for a second derivative (got p={power:g}, n={n})")
    gam = n + power - 1.0
    return sphere_area(n - 2) * (power / (gam - 2.0) - 2.0 / gam)


def _g_infinity(n: int, power: float) -> float:
    gam = n + power - 1.0
    return 0.5 * special.gamma((n - 1) / 2) * special.gamma(-gam / 2) * special.rgamma(-power / 2)


def _g_tail(X, n: int, power: float) -> np.ndarray:
    """t^-gamma * (I(X t, t) - leading two terms) as a function of X = R/t."""
    X = np.asarray(X, dtype=float)
    gam = n + power - 1.0
    out = np.empty(X.shape)
    big = X >= 2.0
    if np.any(big):
        Xb = X[big]
        acc = np.full(Xb.shape, _g_infinity(n, power))
        inv2 = 1.0 / (Xb * Xb)
        term_pow = Xb ** (gam - 4.0)
        for k in range(2, 60):
            coef = special.binom(power / 2, k) / (2 * k - gam)
            acc -= coef * term_pow
            term_pow = term_pow * inv2
            if abs(coef) * 4.0 ** (-k) < 1e-18:
                break
        out[big] = acc
    small = ~big
    if np.any(small):
        Xs = X[small]
        out[small] = (
            radial_integral(Xs, 1.0, n, power)
            - Xs**gam / gam
            - (power / 2) * Xs ** (gam - 2.0) / (gam - 2.0)
        )
    return out


@dataclass
class _Geometry:
    psi: float
    cpsi: float
    spsi: float
    rho_dir: float
    support_value: float
    support_offset: float  # <x*, eta> of the support point


class SectionProfile:
    """The section function t -> A(t) for one body, direction and weight.

    The profile is even and vanishes for ``|t| >= t_max``.  Calling it
    evaluates A on an array of ``t``.  ``taylor`` holds the available
    derivatives at 0 (value, zero first derivative and, when it exists, the
    second derivative).  For the counterexample family on its axis a
    cancellation-free ``remainder`` is also supplied.
    """

    def __init__(self, body: ConvexBody, xi, power: float = 0.0, method: str = "auto", beta_nodes: int | None = None):
        n = body.n
        if n < 3:
            raise DomainError("section functions need n >= 3")
        if power <= 1.0 - n:
            raise DomainError(f"p must exceed -n+1 (got p={power:g}, n={n})")
        psi = float(xi) if np.ndim(xi) == 0 else direction_angle(xi, n)
        if not 0.0 <= psi <= math.pi / 2 + 1e-15:
            raise DomainError("direction angle must be folded into [0, pi/2]")
        self.body = body
        self.n = n
        self.power = float(power)
        self.psi = psi
        if method == "auto":
            method = "axial" if (psi == 0.0 and isinstance(body, ProfileBody)) else "general"
        if method == "axial":
            if not isinstance(body, ProfileBody) or psi != 0.0:
                raise DomainError("the axial reduction needs a body of revolution and the axis direction")
        elif method != "general":
            raise DomainError(f"unknown section method {method!r}")
        self.method = method
        sp = _support_angle(body, psi)
        cpsi, spsi = math.cos(psi), math.sin(psi)
        self._geo = _Geometry(
            psi, cpsi, spsi, float(body.radial_angle(np.array([psi]))[0]), sp.value, -sp.u * cpsi + sp.z * spsi
        )
        self.t_max = sp.value if method == "general" else body.half_height
        self.tail = 0.0
        # relative accuracy of A(t) evaluations, raised when the angle rule saturates
        self.rel_accuracy = 0.0
        if method == "general":
            self._beta_nodes = beta_nodes or self._choose_beta_nodes()
        else:
            self._beta_nodes = 0

    # -------------------------------------------------------- evaluation

    def __call__(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        shape = t.shape
        t = t.ravel()
        out = np.zeros(t.shape)
        live = t < self.t_max
        if np.any(live):
            if self.method == "axial":
                out[live] = self._axial(t[live])
            else:
                out[live] = self._general(t[live], self._beta_nodes)
        return out.reshape(shape)

    def _axial(self, t):
        R = self.body.width(t)
        R = np.maximum(R, 0.0)
        return sphere_area(self.n - 2) * radial_integral(R, t, self.n, self.power)

    def _beta_rule(self, count: int):
        beta, w = gauss_legendre(count, 0.0, math.pi)
        if self.n > 3:
            w = w * np.sin(beta) ** (self.n - 3)
        exact = sphere_area(self.n - 2) / sphere_area(self.n - 3)
        return beta, w * (exact / w.sum())

    def _centres(self, t):
        """In-plane offset of the polar centre along eta for each t."""
        g = self._geo
        sc = np.zeros(t.shape)
        far = t > 0.5 * g.rho_dir
        if not np.any(far):
            return sc
        tf = t[far]
        start = tf / g.support_value * g.support_offset
        span = 2.0 * self.body.outer_radius
        ends = []
        for sgn in (1.0, -1.0):
            lo = np.zeros(tf.shape)
            hi = np.full(tf.shape, span)
            for _ in range(_BISECT_STEPS):
                mid = 0.5 * (lo + hi)
                s = start + sgn * mid
                u = tf * g.spsi - s * g.cpsi
                z = tf * g.cpsi + s * g.spsi
                inside = self.body.contains_sz(np.abs(u), z)
                lo = np.where(inside, mid, lo)
                hi = np.where(inside, hi, mid)
            ends.append(start + sgn * 0.5 * (lo + hi))
        sc[far] = 0.5 * (ends[0] + ends[1])
        return sc

    def _general(self, t, nb: int):
        g = self._geo
        n, p = self.n, self.power
        beta, w = self._beta_rule(nb)
        sc = self._centres(t)
        T = t[:, None]
        S = sc[:, None]
        cb = np.cos(beta)[None, :]
        sb2 = np.sin(beta)[None, :] ** 2
        lo = np.zeros((t.size, nb))
        hi = np.full((t.size, nb), 2.0 * self.body.outer_radius)
        for _ in range(_BISECT_STEPS):
            r = 0.5 * (lo + hi)
            along = S + r * cb
            z = T * g.cpsi + along * g.spsi
            s2 = T * T + along * along + r * r * sb2 - z * z
            inside = self.body.contains_sz(np.sqrt(np.maximum(s2, 0.0)), z)
            lo = np.where(inside, r, lo)
            hi = np.where(inside, hi, r)
        R = 0.5 * (lo + hi)
        if p == 0.0:
            inner = R ** (n - 1) / (n - 1)
        else:
            inner = np.empty(R.shape)
            centred = sc == 0.0
            if np.any(centred):
                inner[centred] = radial_integral(R[centred], np.broadcast_to(T[centred], R[centred].shape), n, p)
            off = ~centred
            if np.any(off):
                x, wr = gauss_legendre(_RADIAL_NODES, 0.0, 1.0)
                Ro = R[off][:, :, None]
                r = Ro * x[None, None, :]
                along = S[off][:, :, None] + r * cb[:, :, None]
                mod2 = T[off][:, :, None] ** 2 + along**2 + r * r * sb2[:, :, None]
                inner[off] = np.sum(mod2 ** (p / 2) * r ** (n - 2) * wr, axis=2) * R[off]
        return sphere_area(n - 3) * (inner @ w)

    def _choose_beta_nodes(self, rel_tol: float = 1e-11, limit: int = 1024) -> int:
        if self.psi == 0.0:
            return 16
        probe = np.array([0.0, 0.3, 0.6, 0.9]) * self.t_max
        nb = 64
        prev = self._general(probe, nb)
        while nb < limit:
            cur = self._general(probe, 2 * nb)
            scale = max(float(np.max(np.abs(cur))), 1e-300)
            nb *= 2
            change = float(np.max(np.abs(cur - prev))) / scale
            if change <= rel_tol:
                return nb // 2 if nb > 64 else nb
            prev = cur
        # the last doubling bounds the error of the finer rule
        self.rel_accuracy = max(self.rel_accuracy, change)
        return nb

    # -------------------------------------------------------- derivatives

    @cached_property
    def value_at_zero(self) -> float:
        if isinstance(self.body, Ball):
            C = sphere_area(self.n - 2)
            return C * self.body.radius ** (self.n - 1 + self.power) / (self.n - 1 + self.power)
        return float(self(np.array([0.0]))[0])

    @property
    def second_derivative_exists(self) -> bool:
        return second_derivative_available(self.n, self.power)

    @cached_property
    def second_derivative(self) -> float:
        """A''(0) by Richardson-extrapolated central differences."""
        if not self.second_derivative_exists:
            raise DomainError(f"p must exceed -n+3 for A''(0) to exist (got p={self.power:g}, n={self.n})")
        fam = self._matching_family()
        if fam is not None:
            return counterexample_section_curvature(self.n, self.power)
        if isinstance(self.body, Ball):
            n, p = self.n, self.power
            C, R = sphere_area(n - 2), self.body.radius
            if p == 0.0:
                return -C * R ** (n - 3)
            return -C * (n - 3) / (n - 3 + p) * R ** (n - 3 + p)
        return self.second_derivative_numeric()

    def second_derivative_numeric(self) -> float:
        h = min(self.t_max, self._geo.rho_dir) / 200.0
        a0 = self.value_at_zero
        vals = self(np.array([h, h / 2]))
        d1 = 2.0 * (vals[0] - a0) / h**2
        d2 = 2.0 * (vals[1] - a0) / (h / 2) ** 2
        return (4.0 * d2 - d1) / 3.0

    @property
    def taylor(self) -> tuple:
        if self.second_derivative_exists:
            return (self.value_at_zero, 0.0, self.second_derivative)
        return (self.value_at_zero,)

    # -------------------------------------------------------- stable remainder

    def _matching_family(self):
        fam = getattr(self.body, "family", None)
        if fam is None or self.method != "axial" or fam.power != self.power:
            return None
        return fam

    @property
    def remainder(self):
        """Cancellation-free t -> A(t) - sum_{j<m} A^(j)(0) t^j / j!, if known."""
        fam = self._matching_family()
        if fam is None:
            return None
        gam = fam.exponent
        if not (self.power == 0.0 or 2.0 < gam < 4.0):
            return None
        return lambda t, m: _family_remainder(fam, np.asarray(t, dtype=float), m)


def _family_remainder(fam, t, m: int) -> np.ndarray:
    n, p, N = fam.n, fam.power, fam.flatness
    gam = fam.exponent
    C = sphere_area(n - 2)
    a0 = C / gam
    a2 = C * (p / (gam - 2.0) - 2.0 / gam) if p != 0.0 else -2.0 * C / gam
    t = np.abs(t)
    out = np.empty(t.shape)
    inside = t < fam.half_height
    ti = t[inside]
    t2 = ti * ti
    rem = -N * t2 * t2 / gam
    if p != 0.0:
        rem = rem + p * t2 / (2.0 * (gam - 2.0)) * np.expm1((gam - 2.0) / gam * np.log1p(-t2 - N * t2 * t2))
        f = fam.profile(ti)
        with np.errstate(divide="ignore", invalid="ignore"):
            X = np.where(ti > 0, f / np.where(ti > 0, ti, 1.0), np.inf)
        gt = np.zeros(ti.shape)
        pos = ti > 0
        gt[pos] = ti[pos] ** gam * _g_tail(X[pos], n, p)
        rem = rem + gt
    out[inside] = C * rem
    to = t[~inside]
    out[~inside] = -a0 - a2 * to * to / 2.0
    if m >= 3:
        return out
    if m == 2 or m == 1:
        return out + a2 * t * t / 2.0
    if m == 0:
        return out + a0 + a2 * t * t / 2.0
    raise DomainError("stable remainder is available for m <= 3 only")


def build_profile(body: ConvexBody, xi, power: float = 0.0, method: str = "auto") -> SectionProfile:
    """Section profile for direction ``xi`` (unit vector or folded angle)."""
    return SectionProfile(body, xi, power, method)


def section_value(body: ConvexBody, xi, power: float, t, method: str = "auto"):
    """A_{K,xi,p}(t); ``t`` may be a scalar or an array."""
    prof = SectionProfile(body, xi, power, method)
    val = prof(np.atleast_1d(t))
    return float(val[0]) if np.ndim(t) == 0 else val


def central_section(body: ConvexBody, xi) -> float:
    """(n-1)-volume of the central section orthogonal to ``xi``."""
    return section_value(body, xi, 0.0, 0.0)


def axial_section(body: ProfileBody, power: float, t):
    """Section orthogonal to the axis of a body of revolution, in closed form."""
    return section_value(body, 0.0, power, t, method="axial")
