"""Axisymmetric origin-symmetric star bodies and convex-geometry helpers.

Every body is described by its radial function as a function of the polar
angle ``phi`` in ``[0, pi]`` measured from the symmetry axis e_n.  All
bodies here are symmetric under ``phi -> pi - phi``.  Points are handled in
meridian coordinates ``(s, z)`` where ``z`` is the coordinate along the axis
and ``s >= 0`` the distance from it.

Text descriptions accepted by the command line (see ``cli.parse_body_spec``):

    kind=ball radius=<r> n=<n>                    or  ball:<r>:n=<n>
    kind=profile n=<n> p=<p> N=<N>                 the flattened family
    kind=superellipse n=<n> a=<a> b=<b> r=<r> s=<s>
    kind=tabulated file=<csv> n=<n>                CSV header angle_rad,rho on [0, pi/2]
    kind=perturbed base=<file> eps=<e> bump_center=<rad> bump_width=<rad> [alpha=<a>]
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, optimize

from .errors import DomainError
from .specfun import integrate_adaptive, sphere_area

__all__ = [
    "Exponents",
    "ConvexBody",
    "Ball",
    "ProfileBody",
    "TabulatedBody",
    "PerturbedBody",
    "ScaledBody",
    "CounterexampleFamily",
    "ConvexityCertificate",
    "SupportPoint",
    "make_counterexample_body",
    "superellipse_body",
    "support_value",
    "volume",
    "volume_polar",
    "check_convexity",
    "support_halfwidth",
    "direction",
    "direction_angle",
    "check_derivative_domain",
]

_BISECT_STEPS = 64


# ---------------------------------------------------------------- exponents


@dataclass(frozen=True)
class Exponents:
    """Exponent bookkeeping for a Laplacian shift ``alpha`` in dimension ``n``.

    ``order`` is the fractional derivative order alpha + 2 and ``power`` the
    section weight -n + alpha + 4.  Both Busemann-Petty parts use the same
    pair; the Laplacian order n - alpha - 4 is exposed separately.
    """

    n: int
    alpha: float
    order: float
    power: float

    @classmethod
    def from_alpha(cls, n: int, alpha: float) -> "Exponents":
        if n < 2:
            raise DomainError("dimension n must be at least 2")
        return cls(int(n), float(alpha), float(alpha) + 2.0, -float(n) + float(alpha) + 4.0)

    @property
    def laplacian_order(self) -> float:
        return self.n - self.alpha - 4.0

    @property
    def floor_order(self) -> int:
        return math.floor(self.order)


def check_derivative_domain(n: int, power: float, order: float) -> None:
    """Raise unless the order-``order`` derivative of the weighted section
    function exists at zero for weight ``|x|^power``."""
    if order <= -1.0:
        raise DomainError(f"q must exceed -1 (got q={order:g})")
    if power <= -n + 1.0:
        raise DomainError(f"p must exceed -n+1 for the weighted section to be finite (got p={power:g}, n={n})")
    if order != math.floor(order):
        bound = -n + math.floor(order) + 2.0
        if power <= bound:
            raise DomainError(
                f"p must exceed -n+[q]+2 = {bound:g} for the derivative of order q to exist "
                f"(got p={power:g}, q={order:g}, n={n})"
            )


# ---------------------------------------------------------------- directions


def direction(n: int, angle: float) -> np.ndarray:
    """Unit vector at polar angle ``angle`` from e_n in the (e_1, e_n) plane."""
    xi = np.zeros(n)
    xi[0] = math.sin(angle)
    xi[-1] = math.cos(angle)
    return xi


def direction_angle(xi, n: Optional[int] = None) -> float:
    """Polar angle of a unit vector, folded into ``[0, pi/2]`` by symmetry."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1:
        raise DomainError("direction must be a 1-D vector")
    if n is not None and xi.size != n:
        raise DomainError(f"direction has dimension {xi.size}, body has {n}")
    norm = float(np.linalg.norm(xi))
    if abs(norm - 1.0) > 1e-12:
        raise DomainError(f"direction must be a unit vector (|xi| = {norm!r})")
    c = abs(float(xi[-1])) / norm
    s = float(np.linalg.norm(xi[:-1])) / norm
    return math.atan2(s, c)


def _fold(phi):
    """Map any angle to ``[0, pi]`` using evenness and 2 pi periodicity."""
    phi = np.mod(np.asarray(phi, dtype=float), 2.0 * math.pi)
    return np.where(phi > math.pi, 2.0 * math.pi - phi, phi)


# ---------------------------------------------------------------- bodies


class ConvexBody:
    """Base class.  Subclasses implement ``radial_angle`` and ``contains_sz``."""

    kind = "abstract"
    n: int
    outer_radius: float

    def radial_angle(self, phi) -> np.ndarray:
        raise NotImplementedError

    def contains_sz(self, s, z) -> np.ndarray:
        phi = np.arctan2(np.abs(s), z)
        r = np.hypot(s, z)
        return r <= self.radial_angle(phi)

    def radial(self, xi) -> float:
        return float(self.radial_angle(direction_angle(xi, self.n)))

    def minkowski_norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return 0.0
        phi = math.atan2(float(np.linalg.norm(x[:-1])), float(x[-1]))
        return r / float(self.radial_angle(phi))

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n}


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    n: int
    radius: float = 1.0
    kind = "ball"

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("dimension n must be at least 2")
        if not self.radius > 0:
            raise DomainError("radius must be positive")

    @property
    def outer_radius(self) -> float:
        return self.radius

    def radial_angle(self, phi) -> np.ndarray:
        return np.full(np.shape(phi), float(self.radius))

    def contains_sz(self, s, z) -> np.ndarray:
        return np.asarray(s) ** 2 + np.asarray(z) ** 2 <= self.radius**2

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "radius": self.radius}


@dataclass(frozen=True)
class CounterexampleFamily:
    """Profile (1 - t^2 - N t^4)^(1/(n+p-1)) with N = ``flatness``."""

    n: int
    power: float
    flatness: float

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("dimension n must be at least 2")
        if not self.flatness > 0:
            raise DomainError("N must be positive")
        if self.n + self.power - 1.0 < 1.0:
            raise DomainError("n+p-1 must be at least 1 for a convex profile")

    @property
    def exponent(self) -> float:
        return self.n + self.power - 1.0

    @property
    def half_height(self) -> float:
        # positive root of 1 - t^2 - N t^4, written without cancellation
        return math.sqrt(2.0 / (1.0 + math.sqrt(1.0 + 4.0 * self.flatness)))

    def base(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        t2 = t * t
        return 1.0 - t2 - self.flatness * t2 * t2

    def profile(self, t) -> np.ndarray:
        return np.maximum(self.base(t), 0.0) ** (1.0 / self.exponent)


class ProfileBody(ConvexBody):
    """Body of revolution ``{(s, z): |z| <= a, s <= f(z)}``."""

    kind = "profile"

    def __init__(self, n: int, profile: Callable, half_height: float, family: CounterexampleFamily | None = None):
        if n < 2:
            raise DomainError("dimension n must be at least 2")
        if not half_height > 0:
            raise DomainError("half height must be positive")
        self.n = int(n)
        self.profile = profile
        self.half_height = float(half_height)
        self.family = family
        z = np.linspace(-self.half_height, self.half_height, 4001)
        f = np.asarray(profile(z), dtype=float)
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise DomainError("profile must be finite and non-negative")
        if not f[2000] > 0:
            raise DomainError("profile must be positive at the centre")
        self.max_width = float(f.max())
        self.outer_radius = 1.05 * math.hypot(self.half_height, self.max_width)

    def width(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        inside = np.abs(z) <= self.half_height
        zc = np.clip(z, -self.half_height, self.half_height)
        return np.where(inside, np.asarray(self.profile(zc), dtype=float), -1.0)

    def contains_sz(self, s, z) -> np.ndarray:
        return np.abs(s) <= self.width(z)

    def radial_angle(self, phi) -> np.ndarray:
        phi = _fold(phi)
        sphi, cphi = np.sin(phi), np.cos(phi)
        lo = np.zeros(phi.shape)
        hi = np.full(phi.shape, self.outer_radius)
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            inside = self.contains_sz(mid * sphi, mid * cphi)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def describe(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "half_height": self.half_height}
        if self.family is not None:
            d.update(p=self.family.power, N=self.family.flatness)
        return d


def superellipse_body(n: int, half_height: float, width: float, r: float = 2.0, s: float = 1.0) -> ProfileBody:
    """Body of revolution with profile width * (1 - |z/half_height|^r)^(1/s).

    The profile is concave for r >= 1 and s >= 1.
    """
    if r < 1.0 or s < 1.0:
        raise DomainError("superellipse exponents must satisfy r >= 1 and s >= 1")
    if not (half_height > 0 and width > 0):
        raise DomainError("superellipse dimensions must be positive")

    def profile(z):
        u = np.abs(np.asarray(z, dtype=float)) / half_height
        return width * np.maximum(1.0 - u**r, 0.0) ** (1.0 / s)

    body = ProfileBody(n, profile, half_height)
    body.shape = {"half_height": half_height, "width": width, "r": r, "s": s}
    return body


def make_counterexample_body(n: int, power: float, flatness: float) -> ProfileBody:
    """Body of revolution with profile (1 - t^2 - N t^4)^(1/(n+p-1))."""
    fam = CounterexampleFamily(int(n), float(power), float(flatness))
    return ProfileBody(fam.n, fam.profile, fam.half_height, family=fam)


class TabulatedBody(ConvexBody):
    """Radial function interpolated by a periodic cubic spline.

    Samples are given on ``[0, pi/2]`` (both ends included) and mirrored to
    ``[0, pi]``.
    """

    kind = "tabulated"

    def __init__(self, n: int, angles, radii):
        angles = np.asarray(angles, dtype=float)
        radii = np.asarray(radii, dtype=float)
        if angles.ndim != 1 or angles.shape != radii.shape or angles.size < 3:
            raise DomainError("need matching 1-D angle and radius arrays with at least 3 samples")
        order = np.argsort(angles)
        angles, radii = angles[order], radii[order]
        if abs(angles[0]) > 1e-12 or abs(angles[-1] - math.pi / 2) > 1e-12:
            raise DomainError("tabulated angles must span [0, pi/2] including both ends")
        if np.any(np.diff(angles) <= 0):
            raise DomainError("tabulated angles must be distinct")
        if np.any(radii <= 0):
            raise DomainError("tabulated radii must be positive")
        angles[0], angles[-1] = 0.0, math.pi / 2
        full_phi = np.concatenate([angles, math.pi - angles[-2::-1]])
        full_r = np.concatenate([radii, radii[-2::-1]])
        self.n = int(n)
        self.angles = angles
        self.radii = radii
        self._spline = interpolate.CubicSpline(full_phi, full_r, bc_type="periodic")
        fine = self._spline(np.linspace(0, math.pi, 2001))
        if np.any(fine <= 0):
            raise DomainError("interpolated radial function is not positive")
        self.outer_radius = 1.05 * float(fine.max())

    @classmethod
    def from_csv(cls, path, n: int) -> "TabulatedBody":
        angles, radii = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    a, r = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                angles.append(a)
                radii.append(r)
        return cls(n, angles, radii)

    def radial_angle(self, phi) -> np.ndarray:
        return np.asarray(self._spline(_fold(phi)), dtype=float)


class PerturbedBody(ConvexBody):
    """Body with rho^(n-1) = rho_base^(n-1) + eps * g.

    ``perturbation`` is an even function of the polar angle.
    """

    kind = "perturbed"

    def __init__(self, base: ConvexBody, perturbation: Callable, eps: float, check_grid: int = 4097):
        if eps == 0:
            raise DomainError("eps must be non-zero")
        self.n = base.n
        self.base = base
        self.perturbation = perturbation
        self.eps = float(eps)
        phi = np.linspace(0.0, math.pi, check_grid)
        val = base.radial_angle(phi) ** (self.n - 1) + self.eps * np.asarray(perturbation(phi), dtype=float)
        k = int(np.argmin(val))
        if not val[k] > 0:
            raise DomainError(
                f"perturbed radial function is not positive: rho^(n-1) = {val[k]:.3g} at angle {phi[k]:.6f}"
            )
        self.outer_radius = 1.05 * float(val.max()) ** (1.0 / (self.n - 1))

    def radial_power(self, phi) -> np.ndarray:
        """rho^(n-1), computed without a root-and-power round trip."""
        phi = _fold(phi)
        return self.base.radial_angle(phi) ** (self.n - 1) + self.eps * np.asarray(self.perturbation(phi), dtype=float)

    def radial_angle(self, phi) -> np.ndarray:
        return np.maximum(self.radial_power(phi), 0.0) ** (1.0 / (self.n - 1))

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "eps": self.eps, "base": self.base.describe()}


class ScaledBody(ConvexBody):
    """Dilate ``factor * base``."""

    kind = "scaled"

    def __init__(self, base: ConvexBody, factor: float):
        if not factor > 0:
            raise DomainError("dilation factor must be positive")
        self.n = base.n
        self.base = base
        self.factor = float(factor)
        self.outer_radius = self.factor * base.outer_radius

    def radial_angle(self, phi) -> np.ndarray:
        return self.factor * self.base.radial_angle(phi)

    def contains_sz(self, s, z) -> np.ndarray:
        return self.base.contains_sz(np.asarray(s) / self.factor, np.asarray(z) / self.factor)

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "factor": self.factor, "base": self.base.describe()}


# ---------------------------------------------------------------- volume


def volume_polar(body: ConvexBody, rel_tol: float = 1e-10) -> float:
    """Volume from the radial function: |S^(n-2)|/n * int rho^n sin^(n-2)."""
    n = body.n

    def integrand(phi):
        return body.radial_angle(phi) ** n * np.sin(phi) ** (n - 2)

    res = integrate_adaptive(integrand, 0.0, math.pi / 2, rel_tol=rel_tol, pieces=8)
    return 2.0 * sphere_area(n - 2) / n * res.value


def volume(body: ConvexBody, rel_tol: float = 1e-10) -> float:
    """Volume of ``body``; bodies of revolution integrate slabs along the axis."""
    if isinstance(body, Ball):
        return math.pi ** (body.n / 2) / math.gamma(body.n / 2 + 1) * body.radius**body.n
    if isinstance(body, ProfileBody):
        n = body.n
        ball_slice = math.pi ** ((n - 1) / 2) / math.gamma((n + 1) / 2)
        res = integrate_adaptive(
            lambda z: body.width(z) ** (n - 1), 0.0, body.half_height, rel_tol=rel_tol, singular=(False, True), pieces=4
        )
        return 2.0 * ball_slice * res.value
    return volume_polar(body, rel_tol)


# ---------------------------------------------------------------- convexity


@dataclass(frozen=True)
class ConvexityCertificate:
    """Outcome of a sampled convexity test.

    ``worst_defect`` is the largest sampled violation (positive means a
    concave corner); ``location`` is the axis coordinate for profile tests
    and the polar angle otherwise; ``step`` the grid spacing at which the
    worst violation was seen.
    """

    passed: bool
    worst_defect: float
    location: float
    step: float
    method: str
    tolerance: float = 1e-9


def _strides(count: int, minimum: int = 9):
    stride = 1
    while (count - 1) // stride + 1 >= minimum:
        yield stride
        stride *= 2


def check_convexity(body: ConvexBody, grid_size: int = 2001, tol: float = 1e-9) -> ConvexityCertificate:
    """Sampled convexity certificate for the meridian section of ``body``.

    Bodies of revolution test concavity of the profile through second
    differences; other bodies test that the polygon through the sampled
    boundary points turns convexly, via u = 1/rho and
    u[i-1] + u[i+1] - 2 cos(h) u[i] >= 0.  The test is repeated on every
    dyadic coarsening of the grid, so a dent wider than a few grid cells is
    caught even when its per-cell second difference is tiny.
    """
    if grid_size < 9:
        raise DomainError("grid_size must be at least 9")
    worst, where, step = -math.inf, 0.0, 0.0
    if isinstance(body, ProfileBody):
        z = np.linspace(-body.half_height, body.half_height, grid_size)
        f = body.width(z)
        for stride in _strides(grid_size):
            zz, ff = z[::stride], f[::stride]
            d = ff[:-2] - 2.0 * ff[1:-1] + ff[2:]
            k = int(np.argmax(d))
            if d[k] > worst:
                worst, where, step = float(d[k]), float(zz[k + 1]), float(zz[1] - zz[0])
        method = "profile"
    else:
        # grid on [0, pi] extended by one mirrored sample at each end
        h0 = math.pi / (grid_size - 1)
        phi = np.linspace(0.0, math.pi, grid_size)
        u = 1.0 / body.radial_angle(phi)
        for stride in _strides(grid_size):
            uu = u[::stride]
            pp = phi[::stride]
            h = h0 * stride
            if pp[-1] != phi[-1]:
                continue  # keep symmetric grids only
            ext = np.concatenate([[uu[1]], uu, [uu[-2]]])
            d = -(ext[:-2] + ext[2:] - 2.0 * math.cos(h) * ext[1:-1]) / ext[1:-1]
            k = int(np.argmax(d))
            if d[k] > worst:
                worst, where, step = float(d[k]), float(pp[k]), h
        method = "polygon"
    return ConvexityCertificate(bool(worst <= tol), worst, where, step, method, tol)


# ---------------------------------------------------------------- support


@dataclass(frozen=True)
class SupportPoint:
    """Support value h(xi) and a maximizing point in meridian coordinates.

    ``u`` is the signed coordinate along the horizontal part of the
    direction and ``z`` the axis coordinate.
    """

    value: float
    u: float
    z: float


def support_halfwidth(body: ConvexBody, xi) -> SupportPoint:
    """Support function of ``body`` in direction ``xi`` with its maximizer."""
    psi = direction_angle(xi, body.n) if np.ndim(xi) else float(xi)
    return _support_angle(body, psi)


def _support_angle(body: ConvexBody, psi: float) -> SupportPoint:
    def value(phi):
        return body.radial_angle(phi) * np.cos(np.asarray(phi) - psi)

    grid = np.linspace(psi - math.pi / 2, psi + math.pi / 2, 1441)
    vals = value(grid)
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(
        lambda p: -float(value(np.array([p]))[0]), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
    )
    phi = float(res.x) if -res.fun >= vals[k] else float(grid[k])
    r = float(body.radial_angle(np.array([phi]))[0])
    return SupportPoint(r * math.cos(phi - psi), r * math.sin(phi), r * math.cos(phi))


def support_value(body: ConvexBody, xi) -> float:
    """Support function h_K(xi) as a plain float."""
    return support_halfwidth(body, xi).value
