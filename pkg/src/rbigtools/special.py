"""Scalar special functions used by the marginal transforms and the analytic
ground truths.

log_gamma and digamma shift their argument upward with the recurrence
relation and then evaluate an asymptotic series. The normal quantile starts
from a rational approximation and is polished with a Halley step against the
normal CDF, so its final accuracy is governed by the CDF, not by the
approximation's coefficients.
"""

import math

import numpy as np
from scipy.special import erfc as _erfc_array

from .errors import DomainError

__all__ = [
    "log_gamma",
    "digamma",
    "log_beta",
    "std_normal_cdf",
    "std_normal_quantile",
    "log_unit_ball_volume",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)

# Stirling series coefficients B_{2k} / (2k (2k-1)), k = 1..7
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)

# Asymptotic digamma coefficients B_{2k} / (2k), k = 1..7
_DIGAMMA_ASYM = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def _check_positive(x, name="x"):
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} must be a finite positive number, got {x!r}")
    return x


def log_gamma(x):
    """Natural log of the gamma function for real ``x > 0``."""
    x = _check_positive(x)
    shift = 0.0
    if x < 7.0:
        prod = 1.0
        while x < 7.0:
            prod *= x
            x += 1.0
        shift = math.log(prod)
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    term = inv
    for c in _STIRLING:
        series += c * term
        term *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series - shift


def digamma(x):
    """Digamma function psi(x) = d/dx ln Gamma(x) for real ``x > 0``."""
    x = _check_positive(x)
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    term = inv2
    for c in _DIGAMMA_ASYM:
        series += c * term
        term *= inv2
    return acc + math.log(x) - 0.5 / x - series


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)."""
    a = _check_positive(a, "a")
    b = _check_positive(b, "b")
    # sort so that log_beta(a, b) and log_beta(b, a) are bitwise identical
    lo, hi = (a, b) if a <= b else (b, a)
    return log_gamma(lo) + log_gamma(hi) - log_gamma(lo + hi)


def log_unit_ball_volume(d):
    """ln of the volume of the unit Euclidean ball in ``d`` dimensions."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return 0.5 * d * math.log(math.pi) - log_gamma(0.5 * d + 1.0)


def std_normal_cdf(x):
    """Standard normal CDF, Phi(x) = erfc(-x / sqrt 2) / 2.

    Accepts a scalar or an array; non-finite entries raise ``DomainError``.
    """
    if np.ndim(x) == 0:
        xf = float(x)
        if not math.isfinite(xf):
            raise DomainError(f"std_normal_cdf needs a finite argument, got {xf!r}")
        return 0.5 * math.erfc(-xf / _SQRT2)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("std_normal_cdf needs finite arguments")
    return 0.5 * _erfc_array(-arr / _SQRT2)


# Acklam's rational approximation of the normal quantile (initial guess only)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    q = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        r = p[mid] - 0.5
        s = r * r
        num = (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r
        den = ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0
        q[mid] = num / den
    for mask, tail, sign in ((lo, p[lo], 1.0), (hi, 1.0 - p[hi], -1.0)):
        if not np.any(mask):
            continue
        t = np.sqrt(-2.0 * np.log(tail))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        q[mask] = sign * num / den
    return q


def _halley(x, p):
    # error measured on the tail nearest to p to keep relative precision
    upper = x > 0.0
    phi_tail = 0.5 * _erfc_array(np.where(upper, x, -x) / _SQRT2)
    target = np.where(upper, 1.0 - p, p)
    e = np.where(upper, target - phi_tail, phi_tail - target)
    # u = e / pdf(x), pdf evaluated in log space to avoid overflow of exp(x^2/2)
    u = e * np.exp(0.5 * x * x + _HALF_LOG_2PI)
    return x - u / (1.0 + 0.5 * x * u)


def std_normal_quantile(p):
    """Inverse standard normal CDF for ``0 < p < 1`` (scalar or array).

    Values outside the open unit interval raise ``DomainError``; callers are
    expected to clamp probabilities first.
    """
    scalar = np.ndim(p) == 0
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("std_normal_quantile needs probabilities strictly inside (0, 1)")
    x = _halley(_acklam(arr), arr)
    x = np.where(arr == 0.5, 0.0, x)
    return float(x[0]) if scalar else x
