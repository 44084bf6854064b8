"""Standard normal distribution functions.

Everything is scalar and built on ``math.erfc``, which keeps relative
accuracy in both tails.  Array inputs are accepted by ``cdf``, ``sf`` and
``pdf`` through element-wise evaluation.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PreconditionError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Rational approximation coefficients (Acklam) used as the starting point
# for Newton refinement of the quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _scalar_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def _scalar_sf(x: float) -> float:
    return 0.5 * math.erfc(x * _INV_SQRT2)


def _scalar_pdf(x: float) -> float:
    return _INV_SQRT2PI * math.exp(-0.5 * x * x)


_vcdf = np.vectorize(_scalar_cdf, otypes=[float])
_vsf = np.vectorize(_scalar_sf, otypes=[float])
_vpdf = np.vectorize(_scalar_pdf, otypes=[float])


def cdf(x):
    """Lower-tail probability P(Z <= x)."""
    if isinstance(x, np.ndarray):
        return _vcdf(x)
    return _scalar_cdf(float(x))


def sf(x):
    """Upper-tail probability P(Z > x), accurate for large positive x."""
    if isinstance(x, np.ndarray):
        return _vsf(x)
    return _scalar_sf(float(x))


def pdf(x):
    """Standard normal density; underflows to 0 for |x| beyond ~38."""
    if isinstance(x, np.ndarray):
        return _vpdf(x)
    return _scalar_pdf(float(x))


def _initial_lower(p: float) -> float:
    # valid for 0 < p <= 0.5
    if p < _P_LOW:
        t = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        return num / den
    s = p - 0.5
    r = s * s
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def _lower_quantile(p: float) -> float:
    x = _initial_lower(p)
    for _ in range(2):
        density = _scalar_pdf(x)
        if density == 0.0:
            break
        x -= (_scalar_cdf(x) - p) / density
    return x


def quantile(p: float) -> float:
    """Inverse of ``cdf``; returns -inf at 0 and +inf at 1."""
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise PreconditionError("0 <= p <= 1", f"probability {p!r} is outside [0, 1]")
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return math.inf
    if p <= 0.5:
        return _lower_quantile(p)
    # 1 - p is exact for p >= 0.5
    return -_lower_quantile(1.0 - p)


def isf(p: float) -> float:
    """Inverse of ``sf``."""
    return -quantile(p)


def isoperimetric_profile(p: float) -> float:
    """Gaussian isoperimetric profile, density evaluated at the p-quantile."""
    x = quantile(p)
    if math.isinf(x):
        return 0.0
    return _scalar_pdf(x)
