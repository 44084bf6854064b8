"""Bracketed scalar root finding on top of Brent's method."""

from __future__ import annotations

from scipy.optimize import brentq

from .errors import NumericalFault


def increasing_root(f, lo: float = -1.0, hi: float = 1.0, limit: float = 1e6,
                    xtol: float = 1e-14) -> float:
    """Root of a strictly increasing function, widening [lo, hi] until it brackets."""
    flo, fhi = f(lo), f(hi)
    while flo > 0 or fhi < 0:
        if max(abs(lo), abs(hi)) > limit:
            raise NumericalFault(f"no sign change within +-{limit}")
        if flo > 0:
            lo -= 2.0 * (hi - lo)
            flo = f(lo)
        if fhi < 0:
            hi += 2.0 * (hi - lo)
            fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    return brentq(f, lo, hi, xtol=xtol, rtol=8.9e-16, maxiter=500)


def decreasing_root_above(f, start: float, first_right: float, limit: float = 1e6,
                          xtol: float = 1e-15) -> float:
    """Root of a decreasing f on [start, inf) with f(start) > 0.

    The right end doubles until f turns nonpositive.
    """
    right = first_right
    f_right = f(right)
    while f_right > 0:
        right *= 2.0
        if right > limit:
            raise NumericalFault(f"no sign change below {limit}")
        f_right = f(right)
    if f_right == 0:
        return right
    return brentq(f, start, right, xtol=xtol, rtol=8.9e-16, maxiter=500)
