"""Independent reference computations shared by the tests."""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq


def vdw_p(v, T):
    return 8.0 * T / (3.0 * v - 1.0) - 3.0 / v**2


def _outer_roots(p, T):
    # 3 p v^3 - (p + 8T) v^2 + 9 v - 3 = 0
    r = np.roots([3.0 * p, -(p + 8.0 * T), 9.0, -3.0])
    r = np.sort(r[np.abs(r.imag) < 1e-9].real)
    r = r[r > 1.0 / 3.0]
    return r[0], r[-1]


def maxwell(T):
    """``(v1, v2, p)`` from the equal-area rule, bisecting on p between the spinodal pressures."""
    vs = np.linspace(0.34, 20.0, 200001)
    dp = np.gradient(vdw_p(vs, T), vs)
    turn = np.nonzero(np.diff(np.sign(dp)))[0]
    p_lo = max(vdw_p(vs[turn[0]], T), 1e-12)
    p_hi = vdw_p(vs[turn[1]], T)

    def area(p):
        v1, v2 = _outer_roots(p, T)
        return quad(lambda v: vdw_p(v, T) - p, v1, v2, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    p = brentq(area, p_lo * (1 + 1e-9), p_hi * (1 - 1e-9), xtol=1e-15, rtol=1e-15)
    v1, v2 = _outer_roots(p, T)
    return v1, v2, p


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)
