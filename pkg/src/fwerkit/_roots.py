"""Scalar root finding on monotone functions.

Brent-style bracketed solving plus geometric bracket expansion. Used for
quantile inversion and for the statistic-scale cutoff search; the functions
being inverted are monotone CDFs / log-survival curves, so a sign-changing
bracket guarantees convergence.
"""

import math

from .errors import NumericError

_MAX_EXPAND = 200


def expand_bracket(f, x0, step, grow=2.0, max_iter=_MAX_EXPAND):
    """Expand geometrically from ``x0`` until ``f`` changes sign.

    Returns (lo, hi, f_lo, f_hi) with f(lo) and f(hi) of opposite sign.
    ``step`` sets the initial probe distance; the direction is chosen from
    the sign of f(x0) assuming f is decreasing in x (larger x, smaller f).
    """
    f0 = f(x0)
    if f0 == 0.0:
        return x0, x0, f0, f0
    # f decreasing: f > 0 means the root lies to the right
    direction = 1.0 if f0 > 0 else -1.0
    lo, flo = x0, f0
    h = abs(step) if step else 1.0
    for _ in range(max_iter):
        hi = lo + direction * h
        fhi = f(hi)
        if fhi == 0.0:
            return hi, hi, fhi, fhi
        if (flo > 0) != (fhi > 0):
            if direction > 0:
                return lo, hi, flo, fhi
            return hi, lo, fhi, flo
        lo, flo = hi, fhi
        h *= grow
    raise NumericError(
        "bracket expansion failed to find a sign change",
        bracket=(x0, lo, f0, flo),
    )


def brent(f, a, b, fa=None, fb=None, xtol=1e-13, ftol=0.0, max_iter=200):
    """Find a root of ``f`` in [a, b] by Brent's method.

    Requires a sign change over [a, b]. ``xtol`` is absolute on the root
    position (scaled by max(1, |x|)); ``ftol`` optionally stops early on
    |f| <= ftol.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise NumericError("no sign change over bracket", bracket=(a, b, fa, fb))

    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol_act = 2.0 * xtol * max(1.0, abs(b))
        m = 0.5 * (c - b)
        if abs(m) <= tol_act or fb == 0.0 or abs(fb) <= ftol:
            return b
        if abs(e) < tol_act or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * m * q - abs(tol_act * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol_act else math.copysign(tol_act, m)
        fb = f(b)
    raise NumericError("brent failed to converge", bracket=(a, b, fa, fb))


def solve_decreasing(f, x0, step, xtol=1e-13, ftol=0.0):
    """Root of a decreasing scalar function, bracketing from ``x0``."""
    lo, hi, flo, fhi = expand_bracket(f, x0, step)
    if lo == hi:
        return lo
    return brent(f, lo, hi, flo, fhi, xtol=xtol, ftol=ftol)
