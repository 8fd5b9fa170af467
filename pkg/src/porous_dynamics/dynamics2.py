"""Second-order dynamics ``y'' = b1 y'^2 / y`` for power-law ``A = q rho^alpha``.

Admissible constants are ``b1 in {-alpha, 1 - alpha, 1 - alpha/2}``.  The
first is trivial; ``1 - alpha/2`` gives the blow-up family
``rho = (alpha (x + C1)^2 / (2 q (alpha + 2) (C2 - t)))^(1/alpha)`` and
``1 - alpha`` the travelling wave
``rho = (C1^2 alpha q t + C1 alpha x + C2 alpha)^(1/alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics1 import ProcessSpec
from .errors import DomainError, TrivialDynamics
from .fields import SolutionField, Validity

BRANCHES = ("trivial", "wave", "blowup")


def branch_b1(branch: str, alpha: float) -> float:
    if branch == "trivial":
        return -alpha
    if branch == "wave":
        return 1.0 - alpha
    if branch == "blowup":
        return 1.0 - alpha / 2.0
    raise DomainError(f"unknown branch {branch!r}; expected one of {BRANCHES}")


@dataclass(frozen=True)
class Dyn2Spec:
    q: float
    alpha: float
    branch: str = "blowup"
    C1: float = 0.0
    C2: float = 1.0

    def __post_init__(self):
        if not self.q > 0:
            raise DomainError(f"q={self.q} must be positive")
        branch_b1(self.branch, self.alpha)
        if self.branch == "blowup" and self.alpha in (0.0, -2.0):
            raise DomainError(f"blow-up formulas degenerate at alpha={self.alpha}")
        if self.branch == "wave" and self.alpha == 0.0:
            raise DomainError("travelling-wave formula degenerates at alpha=0")

    @property
    def b1(self) -> float:
        return branch_b1(self.branch, self.alpha)

    @property
    def beta(self) -> int:
        return -1

    def A(self, rho):
        return self.q * np.asarray(rho, dtype=float) ** self.alpha

    def dA(self, rho):
        return self.q * self.alpha * np.asarray(rho, dtype=float) ** (self.alpha - 1.0)


def power_law_from_process(spec: ProcessSpec) -> tuple[float, float]:
    """Ideal-gas ``(q, alpha)`` with ``A = q rho^alpha`` for constant ``k`` and ``mu``.

    The ideal-gas entropy is ``R ln(T^(n/2) / rho)`` and ``sigma0`` is its
    level in the same units as ``R``.
    """
    gas = spec.gas
    if spec.kind == "isenthalpic":
        if not spec.eta0 > 0:
            raise DomainError(f"eta0={spec.eta0} must be positive so that q > 0")
        return 2.0 * spec.eta0 * gas.mobility / (gas.n + 2.0), 1.0
    if spec.kind == "isentropic":
        q = gas.R * gas.mobility * (2.0 / gas.n + 1.0) * math.exp(2.0 * spec.sigma0 / (gas.R * gas.n))
        return q, 2.0 / gas.n + 1.0
    raise DomainError("power_law_from_process needs an isentropic or isenthalpic process")


def dynamics_rhs(spec: Dyn2Spec, y0, y1):
    """``y2 = b1 y1^2 / y0``; the trivial branch is refused."""
    if spec.branch == "trivial":
        raise TrivialDynamics("b1 = -alpha gives the trivial dynamics; no solution family is attached")
    y0 = np.asarray(y0, dtype=float)
    if np.any(y0 == 0):
        raise ZeroDivisionError("dynamics undefined at y0 = 0")
    out = spec.b1 * np.asarray(y1, dtype=float) ** 2 / y0
    return out if out.ndim else float(out)


def lie_bianchi_integrals(spec: Dyn2Spec, x, y0=None, y1=None):
    """First integrals ``(J1, J2)`` of the blow-up branch dynamics.

    Accepts either a jet point (anything with ``x`` and ``y``) or arrays ``x, y0, y1``.
    """
    if y0 is None:
        x, y0, y1 = x.x, x.y[0], x.y[1]
    if spec.branch != "blowup":
        raise DomainError("first integrals exist for the b1 = 1 - alpha/2 branch")
    y1 = np.asarray(y1, dtype=float)
    if np.any(y1 == 0):
        raise DomainError("first integrals need y1 != 0")
    a, q = spec.alpha, spec.q
    J1 = -np.asarray(x, dtype=float) + 2.0 * y0 / (y1 * a)
    J2 = 2.0 * np.asarray(y0, dtype=float) ** (2.0 - a) / (q * a * (a + 2.0) * y1**2)
    return J1, J2


def blowup_ode_solution(spec: Dyn2Spec, x):
    """Solution of the ODE obtained by eliminating y1 from ``J1 = C1, J2 = C2``."""
    a, q = spec.alpha, spec.q
    return (2.0 * spec.C2 * q * (a + 2.0) / (a * (spec.C1 + np.asarray(x, dtype=float)) ** 2)) ** (-1.0 / a)


def blowup_solution(spec: Dyn2Spec) -> SolutionField:
    if spec.branch != "blowup":
        raise DomainError("blowup_solution needs the b1 = 1 - alpha/2 branch")
    a, q, C1, C2 = spec.alpha, spec.q, spec.C1, spec.C2

    def raw(t, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            rad = a * (x + C1) ** 2 / (2.0 * q * (a + 2.0) * (C2 - t))
            # rho = 0 on x = -C1 is a regular point only for alpha > 0
            ok = ((rad > 0) | ((rad == 0) & (a > 0))) & np.isfinite(rad)
            rho = np.where(ok, np.abs(rad) ** (1.0 / a), np.nan)
        return rho, ok

    # the radicand is positive for t < C2 when alpha / (alpha + 2) > 0, else for t > C2
    before = a / (a + 2.0) > 0
    t_range = (-np.inf, C2) if before else (C2, np.inf)
    locus = f"x = {-C1!r} (density diverges)" if a < 0 else None
    return SolutionField(
        raw=raw,
        validity=Validity(t_range=t_range, singular_locus=locus, blowup_time=C2 if a > 0 else None),
        name="second-order/blowup",
        params=asdict(spec),
    )


def travelling_wave_solution(spec: Dyn2Spec) -> SolutionField:
    if spec.branch != "wave":
        raise DomainError("travelling_wave_solution needs the b1 = 1 - alpha branch")
    a, q, C1, C2 = spec.alpha, spec.q, spec.C1, spec.C2

    def raw(t, x):
        arg = C1**2 * a * q * t + C1 * a * x + C2 * a
        ok = arg > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(ok, np.abs(arg) ** (1.0 / a), np.nan)
        return rho, ok

    return SolutionField(raw=raw, validity=Validity(), name="second-order/wave", params=asdict(spec))


def wave_ode_seed(spec: Dyn2Spec, x):
    """``y(x) = (alpha (C1 x + C2))^(1/alpha)``, the ODE solution carried by the wave."""
    return (spec.alpha * (spec.C1 * np.asarray(x, dtype=float) + spec.C2)) ** (1.0 / spec.alpha)


def solution_field(spec: Dyn2Spec) -> SolutionField:
    if spec.branch == "trivial":
        raise TrivialDynamics("b1 = -alpha gives the trivial dynamics; no solution family is attached")
    return blowup_solution(spec) if spec.branch == "blowup" else travelling_wave_solution(spec)


def matched_first_order_constants(spec: Dyn2Spec, rho_ref: float = 1.0) -> dict:
    """First-order constants whose field equals the travelling wave.

    With ``C2' = 0`` the first-order G is ``q (rho^alpha - rho_ref^alpha) / (alpha C1'^2)``,
    so ``C1' = q C1`` and ``alpha0 = (alpha C2 - rho_ref^alpha) / (alpha C1)``.
    """
    if spec.branch != "wave" or spec.C1 == 0:
        raise DomainError("matching needs the wave branch with C1 != 0")
    a = spec.alpha
    return {
        "C1": spec.q * spec.C1,
        "C2": 0.0,
        "alpha0": (a * spec.C2 - rho_ref**a) / (a * spec.C1),
        "rho_ref": rho_ref,
    }
