"""Reduced van der Waals thermodynamics.

All quantities are in reduced units: the critical point sits at
``(v, T, p) = (1, 1, 1)`` and ``rho = 1 / v``.  State equations::

    p = 8 T / (3 v - 1) - 3 / v**2
    e = (4 n / 3) T - 3 / v
    sigma = (3 R / 8) ln(T**(4n/3) (3 v - 1)**(8/3))

The entropy prefactor ``3 R / 8`` equals one at the default reduced gas
constant ``R = 8/3``; that is the value for which the first law
``T dsigma = de + p dv`` holds with the ``p`` and ``e`` above.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoConvergence

logger = logging.getLogger(__name__)

R_REDUCED = 8.0 / 3.0
SPINODAL_TOL = 1e-10
COEXISTENCE_T_MIN = 0.3


@dataclass(frozen=True)
class GasSpec:
    """Gas and porous-medium parameters."""

    n: int = 3
    """degrees of freedom"""
    k: float = 1.0
    """permeability"""
    mu: float = 1.0
    """viscosity"""
    R: float = R_REDUCED
    """reduced gas constant"""

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"degrees of freedom n={self.n} must be >= 3")
        if not (self.k > 0 and self.mu > 0 and self.R > 0):
            raise DomainError(f"k, mu, R must be positive (got k={self.k}, mu={self.mu}, R={self.R})")

    @property
    def mobility(self) -> float:
        return self.k / self.mu


class Phase(str, enum.Enum):
    APPLICABLE = "Applicable"
    NON_APPLICABLE = "NonApplicable"
    SPINODAL = "SpinodalBoundary"


@dataclass(frozen=True)
class ThermoState:
    v: float
    T: float
    p: float
    e: float
    sigma: float
    phase: Phase

    @property
    def rho(self) -> float:
        return 1.0 / self.v


@dataclass(frozen=True)
class CoexistencePoint:
    T: float
    p: float
    v1: float
    """liquid-branch volume"""
    v2: float
    """gas-branch volume"""


def _check_vT(v, T):
    v = np.asarray(v, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(~(v > 1.0 / 3.0)) or np.any(~(T > 0.0)):
        raise DomainError("van der Waals state requires v > 1/3 and T > 0")
    return v, T


def pressure(v, T):
    return 8.0 * T / (3.0 * v - 1.0) - 3.0 / v**2


def dpressure_dv(v, T):
    return -24.0 * T / (3.0 * v - 1.0) ** 2 + 6.0 / v**3


def energy(v, T, n):
    return 4.0 * n / 3.0 * T - 3.0 / v


def entropy_level(v, T, n):
    """``ln(T**(4n/3) (3v-1)**(8/3))``, the entropy level used by isentropic processes."""
    return 4.0 * n / 3.0 * np.log(T) + 8.0 / 3.0 * np.log(3.0 * v - 1.0)


def entropy(v, T, gas: GasSpec):
    return 3.0 * gas.R / 8.0 * entropy_level(v, T, gas.n)


def spinodal_discriminant(v, T):
    """Sign-carrying factor ``4Tv^3 - 9v^2 + 6v - 1`` of the dv^2 coefficient of kappa."""
    return 4.0 * T * v**3 - 9.0 * v**2 + 6.0 * v - 1.0


def kappa_coefficients(v, T, gas: GasSpec):
    """Diagonal coefficients ``(c_TT, c_vv)`` of the quadratic form kappa."""
    v, T = _check_vT(v, T)
    c_TT = -gas.R * gas.n / (2.0 * T**2)
    c_vv = -9.0 * gas.R * spinodal_discriminant(v, T) / (4.0 * T * v**3 * (3.0 * v - 1.0) ** 2)
    return c_TT, c_vv


def kappa_classify(v: float, T: float, tol: float = SPINODAL_TOL) -> tuple[Phase, float]:
    """Classify a state by the definiteness of kappa.

    The dT^2 coefficient is always negative, so kappa is negative definite
    exactly when the spinodal discriminant is positive.
    """
    _check_vT(v, T)
    D = float(spinodal_discriminant(v, T))
    if abs(D) <= tol:
        return Phase.SPINODAL, D
    return (Phase.APPLICABLE if D > 0 else Phase.NON_APPLICABLE), D


def classify_array(v, T, tol: float = SPINODAL_TOL) -> np.ndarray:
    """Vectorized phase codes: 1 applicable, -1 non-applicable, 0 spinodal."""
    v, T = _check_vT(v, T)
    D = spinodal_discriminant(v, T)
    return np.where(np.abs(D) <= tol, 0, np.sign(D)).astype(int)


def state_from_vT(v: float, T: float, gas: GasSpec = GasSpec()) -> ThermoState:
    _check_vT(v, T)
    v = float(v)
    T = float(T)
    phase, _ = kappa_classify(v, T)
    return ThermoState(
        v=v,
        T=T,
        p=float(pressure(v, T)),
        e=float(energy(v, T, gas.n)),
        sigma=float(entropy(v, T, gas)),
        phase=phase,
    )


def gibbs(v, T, gas: GasSpec = GasSpec()):
    """Specific Gibbs potential ``e - T sigma + p v``."""
    v, T = _check_vT(v, T)
    out = energy(v, T, gas.n) - T * entropy(v, T, gas) + pressure(v, T) * v
    return float(out) if out.ndim == 0 else out


def _gibbs_volume_part(v, T):
    # v-dependent part of the Gibbs potential at R = 8/3; d/dv equals v * dp/dv.
    return -3.0 / v - 8.0 * T / 3.0 * np.log(3.0 * v - 1.0) + pressure(v, T) * v


def spinodal_volumes(T):
    """Liquid and gas spinodal volumes, the roots of the discriminant in v > 1/3, for 0 < T < 1."""
    T = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(~((T > 0) & (T < 1))):
        raise DomainError("spinodal volumes exist only for 0 < T < 1")
    root = np.sqrt(9.0 - 8.0 * T)
    v_max = (3.0 - root) / (4.0 * T)  # local max of D
    v_min = (3.0 + root) / (4.0 * T)  # local min of D, D < 0 there
    lo_l = np.maximum(v_max, 1.0 / 3.0)
    vl = _bisect_D(T, lo_l, v_min, increasing=False)
    vg = _bisect_D(T, v_min, 3.0 / T + 2.0, increasing=True)
    return vl, vg


def _bisect_D(T, lo, hi, increasing):
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d = spinodal_discriminant(mid, T)
        move_lo = (d < 0) if increasing else (d > 0)
        lo = np.where(move_lo, mid, lo)
        hi = np.where(move_lo, hi, mid)
        if np.all(hi - lo <= 4e-16 * hi):
            break
    return 0.5 * (lo + hi)


def _coexistence_residual(x, T):
    a, b, P = x[:, 0], x[:, 1], x[:, 2]
    return np.stack(
        [pressure(a, T) - P, pressure(b, T) - P, _gibbs_volume_part(a, T) - _gibbs_volume_part(b, T)], axis=-1
    )


def _coexistence_newton(T, v1, v2, max_iter=200, tol=1e-13, rtol=1e-14):
    """Damped Newton on (v1, v2, p) for an array of temperatures.

    Residuals: p(v1) - p, p(v2) - p, gamma(v1) - gamma(v2).  Steps are
    halved until they stay inside the metastable brackets
    ``1/3 < v1 < vl``, ``v2 > vg`` and reduce the residual norm; the
    brackets also keep the iteration away from the trivial root v1 = v2.
    """
    vl, vg = spinodal_volumes(T)
    p = 0.5 * (pressure(v1, T) + pressure(v2, T))
    x = np.stack([v1, v2, p], axis=-1)
    converged = np.zeros(T.shape, dtype=bool)
    r = _coexistence_residual(x, T)
    for it in range(max_iter):
        a, b = x[:, 0], x[:, 1]
        # near T = 1 the Jacobian is ill conditioned and steps stall above tol
        # while the residual already sits at round-off
        scale = np.maximum(np.abs(_gibbs_volume_part(a, T)), 1.0)
        norm = np.max(np.abs(r), axis=-1)
        converged |= norm <= rtol * scale
        if np.all(converged):
            break
        da, db = dpressure_dv(a, T), dpressure_dv(b, T)
        J = np.zeros(T.shape + (3, 3))
        J[:, 0, 0] = da
        J[:, 0, 2] = -1.0
        J[:, 1, 1] = db
        J[:, 1, 2] = -1.0
        J[:, 2, 0] = a * da
        J[:, 2, 1] = -b * db
        step = -np.linalg.solve(J, r[..., None])[..., 0]
        step[converged] = 0.0
        lam = np.ones(T.shape)
        accepted = converged.copy()
        # step size is judged on the undamped Newton step; a step shrunk by the
        # line search says nothing about distance to the root
        full = np.max(np.abs(step) / np.maximum(np.abs(x), 1.0), axis=-1)
        for _ in range(60):
            trial = x + lam[:, None] * step
            inside = (trial[:, 0] > 1.0 / 3.0) & (trial[:, 0] < vl) & (trial[:, 1] > vg)
            with np.errstate(invalid="ignore", divide="ignore"):
                r_trial = _coexistence_residual(np.where(inside[:, None], trial, x), T)
            decrease = np.max(np.abs(r_trial), axis=-1) < (1.0 - 1e-4 * lam) * norm
            # tiny steps near convergence are accepted even without decrease
            accepted |= inside & (decrease | (full <= tol))
            if np.all(accepted):
                break
            lam = np.where(accepted, lam, 0.5 * lam)
        x = x + lam[:, None] * step
        r = _coexistence_residual(x, T)
        converged |= accepted & (full <= tol)
    logger.debug("coexistence Newton stopped after %d iterations", it + 1)
    return x, converged


def coexistence_solve(
    T: float,
    gas: GasSpec = GasSpec(),
    t_min: float = COEXISTENCE_T_MIN,
    seed: tuple[float, float] | None = None,
) -> CoexistencePoint:
    """Coexisting liquid/gas volumes at temperature ``T``.

    Newton is seeded from the spinodal volumes shifted 10 % outward unless a
    warm start ``seed = (v1, v2)`` is supplied.  The Gibbs condition is the
    first-law-consistent one (entropy prefactor 1 in reduced units), which
    is equivalent to Maxwell's equal-area rule.
    """
    if not (t_min < T < 1.0):
        raise DomainError(f"coexistence requires {t_min} < T < 1, got T={T}")
    pts = coexistence_many(np.array([T], dtype=float), seed=seed)
    return pts[0]


def coexistence_many(T, seed=None) -> list[CoexistencePoint]:
    T = np.atleast_1d(np.asarray(T, dtype=float))
    v1, v2 = _coexistence_arrays(T, seed)
    p = pressure(v1, T)
    return [CoexistencePoint(T=float(t), p=float(pp), v1=float(a), v2=float(b)) for t, pp, a, b in zip(T, p, v1, v2)]


def _coexistence_arrays(T, seed=None):
    vl, vg = spinodal_volumes(T)
    if seed is None:
        v1 = 1.0 / 3.0 + 0.9 * (vl - 1.0 / 3.0)
        v2 = 1.1 * vg
        # close to the critical point the expansion v = 1 -+ 2 sqrt(1-T) + O(1-T) is far better
        eps = 1.0 - T
        near = eps < 0.05
        root = 2.0 * np.sqrt(np.maximum(eps, 0.0))
        v1 = np.where(near, np.minimum(1.0 - root + 3.6 * eps, 1.0 / 3.0 + 0.999 * (vl - 1.0 / 3.0)), v1)
        v2 = np.where(near, np.maximum(1.0 + root + 3.6 * eps, 1.001 * vg), v2)
    else:
        v1 = np.minimum(np.full(T.shape, seed[0]), 1.0 / 3.0 + 0.999 * (vl - 1.0 / 3.0))
        v2 = np.maximum(np.full(T.shape, seed[1]), 1.001 * vg)
    x, ok = _coexistence_newton(T, v1, v2)
    if not np.all(ok):
        bad = float(T[~ok][0])
        raise NoConvergence(f"coexistence Newton did not converge at T={bad}", where=bad)
    return x[:, 0], x[:, 1]


def coexistence_volumes(T, t_min: float = COEXISTENCE_T_MIN):
    """Vectorized ``(v1, v2)``; NaN where ``T`` is outside ``(t_min, 1)``."""
    T = np.asarray(T, dtype=float)
    v1 = np.full(T.shape, np.nan)
    v2 = np.full(T.shape, np.nan)
    inside = (T > t_min) & (T < 1.0)
    if np.any(inside):
        a, b = _coexistence_arrays(T[inside])
        v1[inside] = a
        v2[inside] = b
    return v1, v2


def coexistence_table(
    T_min: float, T_max: float, steps: int, gas: GasSpec = GasSpec(), t_min: float = COEXISTENCE_T_MIN
) -> list[CoexistencePoint]:
    """Coexistence curve on ``steps`` equally spaced temperatures, warm-started from the hot end."""
    if not (0.0 < T_min < T_max < 1.0):
        raise DomainError(f"need 0 < T_min < T_max < 1, got ({T_min}, {T_max})")
    if steps < 1:
        raise DomainError("steps must be positive")
    temps = np.linspace(T_min, T_max, steps) if steps > 1 else np.array([T_min])
    rows: list[CoexistencePoint] = []
    seed = None
    for T in temps[::-1]:
        try:
            pt = coexistence_solve(float(T), gas, t_min=t_min, seed=seed)
        except NoConvergence as exc:
            raise NoConvergence(f"coexistence_table failed at T={T}: {exc}", where=float(T)) from exc
        seed = (pt.v1, pt.v2)
        rows.append(pt)
    rows.reverse()
    return rows


def coexistence_csv(rows: list[CoexistencePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "p", "v1", "v2"])
    for r in rows:
        w.writerow([f"{r.T:.17g}", f"{r.p:.17g}", f"{r.v1:.17g}", f"{r.v2:.17g}"])
    return buf.getvalue()
