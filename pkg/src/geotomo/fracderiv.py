"""Fractional derivatives at zero of even, compactly supported profiles.

For non-integer q > -1 and m = ceil(q) (m = 0 when q < 0) the derivative is

    f^(q)(0) = 1/Gamma(-q) * int_0^inf t^(-1-q) (f(t) - sum_{j<m} f^(j)(0) t^j / j!) dt.

The integral is split at the support end t_max.  Beyond it only the
subtracted polynomial survives and is integrated in closed form.  On
[0, t_max] the integral runs over dyadic pieces [h/2, h] toward zero.  Once
the pieces agree with the integral of the next Taylor terms, that model
closes the remaining interval [0, h].  Without a cancellation-free remainder
the descent also stops where rounding in f - P starts to dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .specfun import gamma, integrate_adaptive

__all__ = [
    "FracDerivResult",
    "Profile",
    "regularized_integral",
    "frac_deriv_at_zero",
    "integer_deriv_at_zero",
    "exp_profile",
    "cos_profile",
    "INTEGER_GAP",
]

# orders closer than this to an integer are sent to the integer route
INTEGER_GAP = 0.02
_EPS = np.finfo(float).eps
_MAX_LEVELS = 60


@dataclass(frozen=True)
class FracDerivResult:
    value: float
    abs_error_estimate: float
    q: float
    split_point: float
    levels: int = 0
    noise_limited: bool = False


@dataclass
class Profile:
    """An even function given on [0, t_max] with derivatives at zero.

    ``taylor[j]`` is the j-th ordinary derivative at 0.  ``remainder(t, m)``
    optionally returns f(t) - sum_{j<m} taylor[j] t^j / j! without
    cancellation.  ``tail`` is int_{t_max}^inf t^(-1-q) f(t) dt, either a
    number or a function of q; it is zero for profiles supported on
    [0, t_max].
    """

    func: Callable
    t_max: float
    taylor: Sequence[float]
    remainder: Optional[Callable] = None
    tail: float | Callable = 0.0
    name: str = "profile"

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))


def _subtraction_count(q: float) -> int:
    return max(0, math.ceil(q))


def _poly(taylor, lo: int, hi: int, t):
    acc = np.zeros_like(t, dtype=float)
    for j in range(lo, min(hi, len(taylor))):
        if taylor[j] != 0.0:
            acc = acc + taylor[j] * t**j / math.factorial(j)
    return acc


def _model_integral(taylor, m: int, q: float, lo: float, hi: float) -> float:
    """int_lo^hi t^(-1-q) sum_{j>=m} taylor[j] t^j / j! dt for the given terms."""
    acc = 0.0
    for j in range(m, len(taylor)):
        c = taylor[j]
        if c == 0.0:
            continue
        e = j - q
        lo_term = lo**e if lo > 0 else 0.0
        acc += c / math.factorial(j) * (hi**e - lo_term) / e
    return acc


def regularized_integral(profile, q: float, rel_tol: float = 1e-10) -> FracDerivResult:
    """The Taylor-regularized Mellin integral, without the 1/Gamma(-q) factor.

    Integer ``q`` is accepted when it is odd, since the even profile then
    has a vanishing q-th derivative and the integral still converges.
    """
    q = float(q)
    if q <= -1.0:
        raise DomainError(f"q must exceed -1 (got q={q:g})")
    k = round(q)
    if q == k and (k <= 0 or k % 2 == 0):
        raise DomainError(f"the regularized integral diverges at even integer order q={q:g}")
    m = _subtraction_count(q)
    taylor = list(profile.taylor)
    if len(taylor) < m:
        raise DomainError(f"order q={q:g} needs {m} Taylor coefficients, profile supplies {len(taylor)}")
    t_max = float(profile.t_max)
    stable = getattr(profile, "remainder", None)

    if stable is not None:
        def rem(t):
            return stable(t, m)
    else:
        def rem(t):
            return np.asarray(profile(t), dtype=float) - _poly(taylor, 0, m, t)

    def integrand(t):
        return t ** (-1.0 - q) * rem(t)

    # closed-form pieces beyond t_max
    tail = 0.0
    for j in range(m):
        if taylor[j] != 0.0:
            tail -= taylor[j] / math.factorial(j) * t_max ** (j - q) / (q - j)
    extra = getattr(profile, "tail", 0.0)
    tail += float(extra(q)) if callable(extra) else float(extra)

    scale = sum(abs(c) / math.factorial(j) * t_max**j for j, c in enumerate(taylor[:m])) or 1.0
    has_model = any(c != 0.0 for c in taylor[m:])

    # relative accuracy of profile values; rounding at least
    noise_rel = 8.0 * _EPS + float(getattr(profile, "rel_accuracy", 0.0))

    total = 0.0
    mass = abs(tail)
    err = 0.0
    noise = 0.0
    h = t_max
    noise_limited = False
    closure = 0.0
    level = 0
    discs: list = []
    for level in range(_MAX_LEVELS):
        lo = 0.5 * h
        atol = 0.1 * rel_tol * abs(total + tail) if level > 0 else 0.0
        if stable is None and m > 0:
            # the subtraction f - P cannot be resolved below its own rounding
            floor = noise_rel * sum(abs(c) / math.factorial(j) * h**j for j, c in enumerate(taylor[:m]))
            atol = max(atol, floor * h ** (-q))
        res = integrate_adaptive(
            integrand, lo, h, rel_tol=0.1 * rel_tol, abs_tol=atol, singular=(False, level == 0), rel_noise=noise_rel - 8.0 * _EPS
        )
        part = res.value
        total += part
        mass += abs(part)
        err += res.abs_error
        model_part = _model_integral(taylor, m, q, lo, h)
        disc = abs(part - model_part)
        h = lo
        # near a root of the result, measure accuracy against its constituents
        ref = max(abs(total + tail), 1e-3 * mass, 1e-300)
        if stable is None and m > 0:
            # rounding of f - P near t ~ h, integrated over [h/2, h]
            local = noise_rel * sum(abs(c) / math.factorial(j) * h**j for j, c in enumerate(taylor[:m]))
            noise += local * h ** (-q)
        if level >= 2 and disc <= rel_tol * ref:
            closure = _model_integral(taylor, m, q, 0.0, h)
            err += disc
            break
        if stable is None and m > 0 and level >= 2:
            next_noise = noise_rel * scale * (0.5 * h) ** (-q)
            if next_noise > 0.5 * disc:
                closure = _model_integral(taylor, m, q, 0.0, h) if has_model else 0.0
                # the unresolved remainder on [0, h] as a geometric series of the level parts
                ratio = (part - model_part) / discs[-1] if discs and discs[-1] != 0.0 else 0.0
                if 0.0 < ratio < 0.9:
                    extra = (part - model_part) * ratio / (1.0 - ratio)
                    closure += extra
                    err += 0.5 * abs(extra)
                err += disc + noise
                noise_limited = True
                break
        discs.append(part - model_part)
    else:
        raise ConvergenceError(
            f"fractional integral did not settle after {_MAX_LEVELS} dyadic levels",
            estimate=total + tail,
        )
    value = total + closure + tail
    return FracDerivResult(value, err, q, h, level + 1, noise_limited)


def frac_deriv_at_zero(profile, q: float, rel_tol: float = 1e-10) -> FracDerivResult:
    """Fractional derivative of order ``q`` in (-1, 3), non-integer."""
    q = float(q)
    if not -1.0 < q < 3.0:
        raise DomainError(f"q must lie in (-1, 3) (got q={q:g})")
    k = round(q)
    if abs(q - k) < INTEGER_GAP - 1e-12:
        raise DomainError(f"q={q:g} is within {INTEGER_GAP:g} of the integer {k}; use integer_deriv_at_zero")
    res = regularized_integral(profile, q, rel_tol)
    g = gamma(-q)
    return FracDerivResult(res.value / g, res.abs_error_estimate / abs(g), q, res.split_point, res.levels, res.noise_limited)


def integer_deriv_at_zero(profile, k: int) -> float:
    """(-1)^k times the k-th derivative at zero, for k in {0, 1, 2}."""
    if k not in (0, 1, 2):
        raise DomainError("integer derivative order must be 0, 1 or 2")
    taylor = list(profile.taylor)
    if k == 1 and len(taylor) < 2:
        return 0.0  # section profiles are even
    if len(taylor) <= k:
        raise DomainError(f"profile does not supply a derivative of order {k}")
    return float((-1.0) ** k * taylor[k])


# ------------------------------------------------------------- test profiles


def _exp_remainder(t, m):
    t = np.asarray(t, dtype=float)
    direct = np.exp(-t) - _poly([(-1.0) ** j for j in range(m)], 0, m, t)
    series = np.zeros_like(t)
    term = (-t) ** m / math.factorial(m)
    for j in range(m, m + 40):
        series = series + term
        term = term * (-t) / (j + 1)
    return np.where(t < 1.0, series, direct)


def _exp_tail(q):
    T = 40.0
    return math.exp(-T) * T ** (-1.0 - q) * (1.0 - (1.0 + q) / T + (1.0 + q) * (2.0 + q) / T**2)


def exp_profile() -> Profile:
    """e^(-t) on [0, 40]; every fractional derivative at zero equals 1."""
    taylor = [(-1.0) ** j for j in range(7)]
    return Profile(lambda t: np.exp(-t), 40.0, taylor, _exp_remainder, _exp_tail, "exp")


def _cos_taylor(count: int):
    return [0.0 if j % 2 else (-1.0) ** (j // 2) for j in range(count)]


def _cos_remainder(t, m):
    t = np.asarray(t, dtype=float)
    direct = np.cos(t) - _poly(_cos_taylor(m), 0, m, t)
    series = np.zeros_like(t)
    start = m + (m % 2)
    for j in range(start, start + 40, 2):
        series = series + (-1.0) ** (j // 2) * t**j / math.factorial(j)
    return np.where(t < 1.0, series, direct)


def _oscillatory_tail(s: float, T: float, depth: int = 40) -> float:
    """int_T^inf t^(-s) cos t dt by repeated integration by parts."""

    def c_part(s, d):
        if d == depth:
            return 0.0
        return -(T**-s) * math.sin(T) + s * s_part(s + 1.0, d + 1)

    def s_part(s, d):
        if d == depth:
            return 0.0
        return T**-s * math.cos(T) - s * c_part(s + 1.0, d + 1)

    return c_part(s, 0)


def cos_profile(periods: int = 100) -> Profile:
    """cos t on [0, 2 pi periods]; the derivative of order q is cos(pi q / 2)."""
    T = 2.0 * math.pi * periods
    return Profile(
        lambda t: np.cos(t), T, _cos_taylor(7), _cos_remainder, lambda q: _oscillatory_tail(1.0 + q, T), "cos"
    )
