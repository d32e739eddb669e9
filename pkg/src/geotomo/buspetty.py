"""Volume comparison under a fractional-Laplacian section condition.

Two pipelines are provided.  ``positive_verify`` checks that the condition
on the Laplacians of the section functions forces vol(K) <= vol(L) when
alpha lies in (-3, 0].  The counterexample pipeline treats alpha in (0, 1].
It scans the critical integral of the flattened body family, locates the
cap of directions where the relevant transform is negative, and pushes the
body inward there with a smooth bump.  The result is a pair that satisfies
the condition while the volumes compare the wrong way.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .bodies import (
    ConvexBody,
    ConvexityCertificate,
    Exponents,
    PerturbedBody,
    ProfileBody,
    check_convexity,
    make_counterexample_body,
    volume,
)
from .errors import ConvergenceError, DomainError, PipelineError, PreconditionError
from .fourier import (
    SphericalFunction,
    axisym_homogeneous_ft,
    frac_laplacian_grid,
    radial_power_expansion,
    third_order_integral,
    transform_via_harmonics,
    transform_via_sections,
)
from .fracderiv import regularized_integral
from .sections import SectionProfile
from .specfun import integrate_adaptive, sphere_area

__all__ = [
    "ConditionReport",
    "PositiveVerdict",
    "ScanReport",
    "CounterexamplePair",
    "check_condition",
    "positive_verify",
    "critical_integral",
    "critical_integral_closed",
    "scan_counterexample",
    "negative_cap",
    "bump_expansion",
    "volume_gain",
    "build_counterexample",
    "verify_pair",
    "default_threads",
]

log = logging.getLogger(__name__)

CONDITION_TOL = 1e-9
VOLUME_TOL = 1e-6
EPS_FLOOR = 1e-12


def default_threads() -> int:
    env = os.environ.get("GEOTOMO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"GEOTOMO_THREADS must be an integer (got {env!r})") from None
    return os.cpu_count() or 1


def _pmap(func, items, threads: Optional[int]):
    threads = threads or default_threads()
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


# ------------------------------------------------------------ condition


@dataclass
class ConditionReport:
    alpha: float
    grid: list
    lhs: list
    rhs: list
    margin: float
    satisfied: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _expansion_degree(body: ConvexBody) -> int:
    deg = radial_power_expansion(body, body.n - 1.0).degree
    pert = getattr(body, "perturbation", None)
    if isinstance(pert, SphericalFunction):
        deg = max(deg, pert.degree)
    base = getattr(body, "base", None)
    if base is not None:
        deg = max(deg, _expansion_degree(base))
    return deg


def check_condition(K: ConvexBody, L: ConvexBody, alpha: float, grid_size: int = 181, degree: int | None = None) -> ConditionReport:
    """Compare (-Delta)^((n-alpha-4)/2) S_K and S_L on a polar-angle grid.

    Both sides use one common Gegenbauer degree so that truncation errors
    cancel in the difference.
    """
    if K.n != L.n:
        raise DomainError(f"dimension mismatch: K has n={K.n}, L has n={L.n}")
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    if degree is None:
        degree = max(_expansion_degree(K), _expansion_degree(L))
    grid = np.linspace(0.0, math.pi / 2, grid_size)
    lhs = frac_laplacian_grid(K, alpha, grid, degree)
    rhs = frac_laplacian_grid(L, alpha, grid, degree)
    margin = float(np.min(rhs - lhs))
    satisfied = bool(margin >= -CONDITION_TOL * float(np.max(np.abs(rhs))))
    return ConditionReport(float(alpha), grid.tolist(), lhs.tolist(), rhs.tolist(), margin, satisfied)


@dataclass
class PositiveVerdict:
    consistent: bool
    vol_K: float
    vol_L: float
    margin: float
    details: str = ""


def positive_verify(K: ConvexBody, L: ConvexBody, alpha: float, grid_size: int = 181) -> PositiveVerdict:
    """Check vol(K) <= vol(L) (1 + 1e-6) for a pair satisfying the condition."""
    if not -3.0 < alpha <= 0.0:
        raise DomainError(f"the volume comparison holds for alpha in (-3, 0] (got alpha={alpha:g})")
    if K.n < 4:
        raise DomainError("the volume comparison is stated for n >= 4")
    report = check_condition(K, L, alpha, grid_size)
    if not report.satisfied:
        raise PreconditionError(f"the section condition fails: margin {report.margin:.3e}")
    vk, vl = volume(K), volume(L)
    ok = vk <= vl * (1.0 + VOLUME_TOL)
    details = "" if ok else f"VIOLATION: vol(K)={vk:.12g} exceeds vol(L)={vl:.12g}"
    return PositiveVerdict(ok, vk, vl, report.margin, details)


# ------------------------------------------------------------ critical integral


def _critical_exponents(n: int, alpha: float) -> Exponents:
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"the counterexample needs alpha in (0, 1] (got alpha={alpha:g})")
    if n < 5:
        raise DomainError("the counterexample needs n >= 5")
    return Exponents.from_alpha(n, alpha)


def critical_integral(n: int, alpha: float, N: float, rel_tol: float = 1e-10) -> float:
    """int_0^inf t^(-q-1) (A(t) - A(0) - A''(0) t^2/2) dt on the axis of the flattened body."""
    ex = _critical_exponents(n, alpha)
    body = make_counterexample_body(n, ex.power, N)
    prof = SectionProfile(body, 0.0, ex.power, method="axial")
    return regularized_integral(prof, ex.order, rel_tol).value


def critical_integral_closed(n: int, N: float) -> float:
    """Closed form of the critical integral for alpha = 1, n = 5 (weight p = 0)."""
    if n != 5:
        raise DomainError("the closed form covers n = 5 only")
    a = math.sqrt(2.0 / (1.0 + math.sqrt(1.0 + 4.0 * N)))
    return sphere_area(3) * (-N * a / 3.0 + 1.0 / (6.0 * a))


@dataclass
class ScanReport:
    n: int
    alpha: float
    p: float
    q: float
    rows: list
    threshold_N: Optional[float]
    fitted_exponent: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _sign(x: float) -> int:
    return 1 if x > 0 else -1 if x < 0 else 0


def scan_counterexample(
    n: int,
    alpha: float,
    N_min: float = 1.0,
    N_max: float = 1e12,
    points_per_decade: int = 4,
    rel_tol: float = 1e-10,
    threads: Optional[int] = None,
) -> ScanReport:
    """Tabulate the critical integral on a geometric grid of N."""
    ex = _critical_exponents(n, alpha)
    if not 0 < N_min < N_max:
        raise DomainError("need 0 < N_min < N_max")
    if points_per_decade < 1:
        raise DomainError("points_per_decade must be positive")
    decades = math.log10(N_max / N_min)
    count = int(round(decades * points_per_decade)) + 1
    grid = np.geomspace(N_min, N_max, count)
    values = _pmap(lambda N: critical_integral(n, alpha, float(N), rel_tol), grid, threads)
    rows = [[float(N), float(v), _sign(v)] for N, v in zip(grid, values)]
    threshold = None
    for (n0, v0, s0), (n1, v1, s1) in zip(rows, rows[1:]):
        if s0 > 0 and s1 < 0:
            f = lambda lg: critical_integral(n, alpha, math.exp(lg), rel_tol)
            threshold = math.exp(optimize.brentq(f, math.log(n0), math.log(n1), xtol=1e-12, rtol=1e-12))
            break
    slope = None
    if threshold is not None:
        tail = [(math.log(N), math.log(abs(v))) for N, v, s in rows if N >= 100.0 * threshold and v != 0.0]
        if len(tail) >= 2:
            x, y = np.array(tail).T
            slope = float(np.polyfit(x, y, 1)[0])
    return ScanReport(ex.n, ex.alpha, ex.power, ex.order, rows, threshold, slope)


# ------------------------------------------------------------ construction


def _cap_transform(L: ConvexBody, ex: Exponents, method: str):
    if ex.order == 3.0 and method == "sections":
        return lambda phi: third_order_integral(L, phi, ex.power).value
    if method == "sections":
        return lambda phi: transform_via_sections(L, phi, ex.power, ex.order)
    if method == "harmonics":
        v = radial_power_expansion(L, ex.n + ex.power - ex.order - 1.0)
        g = axisym_homogeneous_ft(v, ex.order)
        return lambda phi: float(g(np.array([phi]))[0])
    raise DomainError(f"unknown method {method!r}")


def negative_cap(
    L: ConvexBody, alpha: float, centre: float = 0.0, method: str = "harmonics", coarse: int = 25, threads: Optional[int] = None
) -> tuple[float, float]:
    """Angular interval around ``centre`` where the transform of ||x||_L^-1 |x|^(-n+q+2) is negative.

    Returns ``(lo, hi)`` polar angles; for ``centre = 0`` the cap is
    symmetric about the axis and ``lo = 0``.
    """
    ex = Exponents.from_alpha(L.n, alpha)
    value = _cap_transform(L, ex, method)
    if not value(centre) < 0:
        raise PipelineError(
            "the transform is not negative at the bump centre (N below threshold?)", {"centre": centre}
        )
    grid = np.linspace(0.0, math.pi / 2, coarse)
    vals = _pmap(value, grid, threads)

    def edge(start, stop):
        # first grid sign change moving from start toward stop, then refine
        step = 1 if stop > start else -1
        pts = [start] + [g for g in grid[:: step] if (g - start) * step > 0 and (g - stop) * step <= 0]
        prev = start
        for g in pts[1:]:
            if not value(g) < 0:
                return optimize.brentq(value, prev, g, xtol=1e-6)
            prev = g
        return stop

    hi = edge(centre, math.pi / 2)
    lo = 0.0 if centre == 0.0 else edge(centre, 0.0)
    log.info("negative cap [%g, %g] (coarse signs %s)", lo, hi, np.sign(vals).astype(int).tolist())
    return lo, hi


def _bump_profile(centre: float, width: float):
    def beta(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        m = np.abs(u) < 1.0
        out[m] = np.exp(-0.5 / (1.0 - u[m] ** 2))
        return out

    def b(phi):
        phi = np.asarray(phi, dtype=float)
        if centre == 0.0:
            return beta(phi / width) + beta((math.pi - phi) / width)
        return beta((phi - centre) / width) + beta((math.pi - phi - centre) / width)

    return b


def bump_expansion(n: int, centre: float, width: float, max_degree: int = 256) -> SphericalFunction:
    """Non-positive smooth even bump v = -b^2 concentrated on ``|phi - centre| < width``.

    b = exp(-1/(2(1-u^2))) is expanded first and v is formed as minus the
    square of the truncated series, so v <= 0 holds exactly for the finite
    expansion; its square is the classical bump exp(-1/(1-u^2)).
    """
    if not width > 0:
        raise DomainError("bump width must be positive")
    if centre == 0.0:
        if width >= math.pi / 2:
            raise DomainError("a polar bump needs width < pi/2")
    elif centre < width or centre + width > math.pi / 2:
        raise DomainError("an off-axis bump must satisfy width <= centre <= pi/2 - width")
    b = SphericalFunction.adaptive(_bump_profile(centre, width), n, max_degree=max_degree)
    v = SphericalFunction.from_function(lambda phi: -b(phi) ** 2, n, 2 * b.degree)
    return SphericalFunction(n, v.coeffs, b.converged)


def volume_gain(L: ConvexBody, g, eps: float, rel_tol: float = 1e-12) -> float:
    """vol(K) - vol(L) for rho_K^(n-1) = rho_L^(n-1) + eps g, without cancellation."""
    n = L.n

    def integrand(phi):
        rl = L.radial_angle(phi)
        ratio = eps * np.asarray(g(phi), dtype=float) / rl ** (n - 1)
        return rl**n * np.expm1(n / (n - 1.0) * np.log1p(ratio)) * np.sin(phi) ** (n - 2)

    res = integrate_adaptive(integrand, 0.0, math.pi / 2, rel_tol=rel_tol, abs_tol=1e-300, pieces=16)
    return 2.0 * sphere_area(n - 2) / n * res.value


@dataclass
class CounterexamplePair:
    L: ConvexBody
    K: ConvexBody
    epsilon: float
    bump: tuple
    condition: ConditionReport
    vol_L: float
    vol_K: float
    N: float = float("nan")
    cap: tuple = ()
    convexity: Optional[ConvexityCertificate] = None
    attempts: list = field(default_factory=list)

    @property
    def relative_gain(self) -> float:
        return (self.vol_K - self.vol_L) / self.vol_L

    def summary(self) -> dict:
        return {
            "n": self.L.n,
            "alpha": self.condition.alpha,
            "N": self.N,
            "epsilon": self.epsilon,
            "bump_center": self.bump[0],
            "bump_width": self.bump[1],
            "cap": list(self.cap),
            "vol_L": self.vol_L,
            "vol_K": self.vol_K,
            "relative_gain": self.relative_gain,
            "condition_margin": self.condition.margin,
            "condition_satisfied": self.condition.satisfied,
            "convexity_passed": None if self.convexity is None else self.convexity.passed,
        }


def build_counterexample(
    n: int = 5,
    alpha: float = 0.5,
    N: float | None = None,
    bump_center: float = 0.0,
    bump_width: float | None = None,
    eps_start: float | None = None,
    grid_size: int = 181,
    convexity_grid: int = 2001,
    cap_method: str = "harmonics",
    enforce_convexity: bool = True,
    threads: Optional[int] = None,
) -> CounterexamplePair:
    """Construct K, L with the section condition satisfied but vol(L) < vol(K).

    ``enforce_convexity=False`` skips the convexity certificate in the
    epsilon search; the resulting K is then only a star body and the pair
    is not a counterexample.  The option exists for diagnostics.
    """
    ex = _critical_exponents(n, alpha)
    if eps_start is not None and not eps_start > 0:
        raise DomainError("eps_start must be positive")
    if N is None:
        scan = scan_counterexample(n, alpha, 1.0, 1e12, 2, threads=threads)
        if scan.threshold_N is None:
            raise PipelineError("no sign change of the critical integral in N in [1, 1e12]")
        N = 10.0 * scan.threshold_N
    if not critical_integral(n, alpha, N) < 0:
        raise PipelineError("N below threshold: the critical integral is not negative", {"N": N})
    L = make_counterexample_body(n, ex.power, N)
    lo, hi = negative_cap(L, alpha, bump_center, cap_method, threads=threads)
    reach = hi if bump_center == 0.0 else min(bump_center - lo, hi - bump_center)
    if bump_width is None:
        bump_width = 0.5 * reach
    if bump_width > reach:
        raise PipelineError("bump support leaves the negative cap", {"cap": (lo, hi), "width": bump_width})
    v = bump_expansion(n, bump_center, bump_width)
    g = axisym_homogeneous_ft(v, ex.order)
    degree = max(g.degree, _expansion_degree(L))
    phi = np.linspace(0.0, math.pi, 4097)
    gmax = float(np.max(np.abs(g(phi))))
    if eps_start is None:
        eps_start = 0.1 * float(np.min(L.radial_angle(phi) ** (n - 1))) / gmax
    eps = eps_start
    attempts = []
    while True:
        if eps < EPS_FLOOR:
            raise PipelineError(
                f"epsilon fell below {EPS_FLOOR:g} before the perturbed body passed the checks",
                {"N": N, "cap": (lo, hi), "bump": (bump_center, bump_width), "attempts": attempts},
            )
        try:
            K = PerturbedBody(L, g, eps)
        except DomainError as exc:
            attempts.append({"eps": eps, "positive": False, "reason": str(exc)})
            eps *= 0.5
            continue
        cert = check_convexity(K, convexity_grid)
        report = check_condition(K, L, alpha, grid_size, degree)
        attempts.append(
            {
                "eps": eps,
                "convex": cert.passed,
                "convexity_defect": cert.worst_defect,
                "defect_angle": cert.location,
                "condition": report.satisfied,
                "margin": report.margin,
            }
        )
        log.info("eps=%.3e convex=%s (defect %.3e at %.4f) condition=%s", eps, cert.passed, cert.worst_defect, cert.location, report.satisfied)
        if report.satisfied and (cert.passed or not enforce_convexity):
            break
        eps *= 0.5
    gain = volume_gain(L, g, eps)
    vol_L = volume(L, rel_tol=1e-12)
    vol_K = vol_L + gain
    if not gain > 0:
        raise PipelineError(
            "the perturbed body does not have larger volume",
            {"eps": eps, "gain": gain, "attempts": attempts},
        )
    return CounterexamplePair(L, K, eps, (bump_center, bump_width), report, vol_L, vol_K, N, (lo, hi), cert, attempts)


def verify_pair(pair: CounterexamplePair, grid_size: int = 361) -> tuple[ConditionReport, float]:
    """Recheck the condition on a fresh grid and recompute the volume gain."""
    report = check_condition(pair.K, pair.L, pair.condition.alpha, grid_size)
    gain = volume_gain(pair.L, pair.K.perturbation, pair.K.eps)
    return report, gain
