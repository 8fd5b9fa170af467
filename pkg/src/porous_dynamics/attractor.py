"""Attractor inequalities for ``F = y2 - b1 y1^2 / y0`` under ``A = q rho^alpha``.

With ``phi = q y0^alpha y2 + q alpha y0^(alpha-1) y1^2`` the coefficient
``a`` of ``[phi, F] = a F`` (taken with ``b = 0``) gives
``psi1 = q alpha y0^(alpha-2) (y2 y0 + (alpha-1) y1^2) + a``,
``psi2 = 2 q alpha y1 y0^(alpha-1)`` and ``psi3 = q y0^alpha``.  The
dynamics attracts solutions whose jets keep ``psi1 <= c1 < 0`` and
``psi3 >= c2 > 0``.

The denominator of ``a`` equals ``-y0 F``, so ``a`` is 0/0 on the surface
F = 0 itself.  For the admissible ``b1`` the numerator carries the same
factor and ``a`` extends continuously; :func:`coeff_a_regular` is that
extension.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import sympy as sp

from .dynamics2 import branch_b1
from .errors import DomainError, SingularDenominator
from .fields import SolutionField, grid_csv
from .jets import JetFunction, JetPoint, Y, second_order_pair
from .pde_oracle import PdeRun, pinned_boundary, solve

SINGULAR_RTOL = 1e-13
OUT, IN, UNDECIDABLE = 0, 1, 2


@dataclass(frozen=True)
class AttractorParams:
    q: float
    alpha: float
    b1: float
    n: float | None = None
    c1: float = -1.0
    c2: float = 1.0

    def __post_init__(self):
        if not self.q > 0:
            raise DomainError(f"q={self.q} must be positive")
        if not self.c1 < 0 < self.c2:
            raise DomainError(f"need c1 < 0 < c2, got c1={self.c1}, c2={self.c2}")

    @classmethod
    def isentropic(cls, n: float, q: float = 1.0, c1: float = -1.0, c2: float = 1.0, branch: str = "wave"):
        alpha = 2.0 / n + 1.0
        return cls(q=q, alpha=alpha, b1=branch_b1(branch, alpha), n=n, c1=c1, c2=c2)

    @property
    def admissible(self) -> bool:
        a = self.alpha
        return any(math.isclose(self.b1, b, rel_tol=0, abs_tol=1e-12) for b in (-a, 1 - a, 1 - a / 2))


def _arrays(*vals):
    return np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in vals))


def _a_parts(p: AttractorParams, y0, y1, y2):
    a, b1 = p.alpha, p.b1
    num = (a * a - a * (b1 + 3.0) + 2.0) * y1**4 + 4.0 * y2 * y1**2 * y0 * (a - 1.0) + 2.0 * y2**2 * y0**2
    den = b1 * y1**2 - y2 * y0
    singular = np.abs(den) <= SINGULAR_RTOL * (np.abs(b1) * y1**2 + np.abs(y2 * y0))
    return p.q * (a + b1) * y0 ** (a - 2.0) * num, den, singular


def coeff_a_array(p: AttractorParams, y0, y1, y2):
    """Vectorized ``a`` with a mask of singular-denominator points (NaN there)."""
    y0, y1, y2 = _arrays(y0, y1, y2)
    if np.any(y0 <= 0):
        raise DomainError("coeff_a needs y0 > 0")
    num, den, singular = _a_parts(p, y0, y1, y2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(singular, np.nan, num / np.where(singular, 1.0, den))
    if p.b1 == -p.alpha:
        out = np.zeros_like(out)
        singular = np.zeros_like(singular)
    return out, singular


def coeff_a(p: AttractorParams, jet: JetPoint) -> float:
    """``a`` at a jet; ``b = 0``."""
    y0, y1, y2 = jet.y[:3]
    out, singular = coeff_a_array(p, y0, y1, y2)
    if singular:
        raise SingularDenominator(f"b1 y1^2 = y2 y0 at {jet}: attractor test undecidable at this jet")
    return float(out)


def coeff_a_regular(p: AttractorParams, y0, y1, y2):
    """Continuous extension of ``a`` across F = 0 for admissible ``b1``.

    ``a = -2 q (alpha + b1) y0^(alpha-2) (y0 y2 + (2 alpha - 2 + b1) y1^2)``.
    """
    if not p.admissible:
        raise DomainError(f"b1={p.b1} is not admissible for alpha={p.alpha}; a has a genuine pole")
    y0, y1, y2 = _arrays(y0, y1, y2)
    a, b1 = p.alpha, p.b1
    return -2.0 * p.q * (a + b1) * y0 ** (a - 2.0) * (y0 * y2 + (2.0 * a - 2.0 + b1) * y1**2)


def exact_bracket_coefficients(p: AttractorParams):
    """Jet functions ``(a, b)`` with ``[phi, F] = a F + b DF`` holding identically.

    The b = 0 coefficient above satisfies the identity only on F = 0; off the
    surface the bracket also carries ``b = -2 q alpha y1 y0^(alpha-1)`` and ``a``
    shifts by ``q alpha (b1 + 1 - alpha) y1^2 y0^(alpha-2)``.
    """
    if not p.admissible or p.b1 == -p.alpha:
        raise DomainError("exact coefficients are provided for the two non-trivial branches")
    y0, y1, y2 = Y[0], Y[1], Y[2]
    q, a, b1 = p.q, p.alpha, p.b1
    a_reg = -2 * q * (a + b1) * y0 ** (a - 2) * (y0 * y2 + (2 * a - 2 + b1) * y1**2)
    a_exact = a_reg + q * a * (b1 + 1 - a) * y1**2 * y0 ** (a - 2)
    b = -2 * q * a * y1 * y0 ** (a - 1)
    return JetFunction.from_expr(a_exact, name="a"), JetFunction.from_expr(b, name="b")


def regular_a_function(p: AttractorParams) -> JetFunction:
    y0, y1, y2 = Y[0], Y[1], Y[2]
    a, b1 = p.alpha, p.b1
    if not p.admissible:
        raise DomainError(f"b1={p.b1} is not admissible for alpha={p.alpha}")
    expr = -2 * p.q * (a + b1) * y0 ** (a - 2) * (y0 * y2 + (2 * a - 2 + b1) * y1**2)
    return JetFunction.from_expr(sp.sympify(expr), name="a")


def dynamics_pair(p: AttractorParams):
    return second_order_pair(p.q, p.alpha, p.b1)


def _phi0(p: AttractorParams, y0, y1, y2):
    a = p.alpha
    return p.q * a * y0 ** (a - 2.0) * (y2 * y0 + (a - 1.0) * y1**2)


def psi_arrays(p: AttractorParams, y0, y1, y2, regular: bool = False):
    """``(psi1, psi2, psi3, singular)``; ``regular`` uses the extension of ``a`` across F = 0."""
    y0, y1, y2 = _arrays(y0, y1, y2)
    if regular:
        a = coeff_a_regular(p, y0, y1, y2)
        singular = np.zeros(a.shape, dtype=bool)
    else:
        a, singular = coeff_a_array(p, y0, y1, y2)
    psi1 = _phi0(p, y0, y1, y2) + a
    psi2 = 2.0 * p.q * p.alpha * y1 * y0 ** (p.alpha - 1.0)
    psi3 = p.q * y0**p.alpha
    return psi1, psi2, psi3, singular


def psi_functions(p: AttractorParams, jet: JetPoint) -> tuple[float, float, float]:
    psi1, psi2, psi3, singular = psi_arrays(p, *jet.y[:3])
    if singular:
        raise SingularDenominator(f"b1 y1^2 = y2 y0 at {jet}: attractor test undecidable at this jet")
    return float(psi1), float(psi2), float(psi3)


def isentropic_psi1(q: float, n: float, y0, y1, y2):
    """Closed form of psi1 for ``alpha = 2/n + 1`` on the ``b1 = 1 - alpha`` branch."""
    y0, y1, y2 = _arrays(y0, y1, y2)
    return -q * (n - 2.0) / n**2 * (y2 * y0 * n + 2.0 * y1**2) * y0 ** (2.0 / n - 1.0)


def isentropic_psi1_boundary(q: float, n: float, c1: float, y0, y2):
    """``|y1|`` where the closed-form psi1 equals ``c1`` (NaN where no real root)."""
    y0 = np.asarray(y0, dtype=float)
    sq = (c1 * n**2 / (-q * (n - 2.0)) * y0 ** (1.0 - 2.0 / n) - n * y0 * y2) / 2.0
    with np.errstate(invalid="ignore"):
        return np.where(sq >= 0, np.sqrt(np.abs(sq)), np.nan)


def attractor_test(p: AttractorParams, jet: JetPoint) -> bool:
    psi1, _, psi3 = psi_functions(p, jet)
    return bool(psi1 <= p.c1 and psi3 >= p.c2)


@dataclass
class DomainMask:
    y0: np.ndarray
    y1: np.ndarray
    y2: float
    codes: np.ndarray  # shape (len(y1), len(y0)); 0 out, 1 in, 2 undecidable

    def to_csv(self) -> str:
        Y0, Y1 = np.meshgrid(self.y0, self.y1)
        return grid_csv(["y0", "y1", "in_domain"], [Y0.ravel(), Y1.ravel(), self.codes.ravel()])

    @property
    def filename(self) -> str:
        return f"attractor_y2_{self.y2:g}.csv"


def attractor_domain(p: AttractorParams, y2: float, y0_grid, y1_grid) -> DomainMask:
    y0_grid = np.asarray(y0_grid, dtype=float)
    y1_grid = np.asarray(y1_grid, dtype=float)
    if np.any(y0_grid <= 0):
        raise DomainError("attractor_domain needs a grid inside y0 > 0")
    Y0, Y1 = np.meshgrid(y0_grid, y1_grid)
    psi1, _, psi3, singular = psi_arrays(p, Y0, Y1, np.full_like(Y0, y2))
    with np.errstate(invalid="ignore"):
        inside = (psi1 <= p.c1) & (psi3 >= p.c2)
    codes = np.where(singular, UNDECIDABLE, np.where(inside, IN, OUT)).astype(int)
    return DomainMask(y0_grid, y1_grid, float(y2), codes)


@dataclass(frozen=True)
class Perturbation:
    """``amplitude (1 - s^2)`` with ``s`` running from -1 to 1 across the window ("parabola"),
    or ``amplitude sin(pi s')`` with ``s'`` from 0 to 1 ("sine").  Both vanish at the ends."""

    amplitude: float = -1e-2
    shape: str = "parabola"

    def __call__(self, x, x_lo: float, x_hi: float):
        x = np.asarray(x, dtype=float)
        if self.shape == "parabola":
            s = (2.0 * x - x_lo - x_hi) / (x_hi - x_lo)
            return self.amplitude * (1.0 - s * s)
        if self.shape == "sine":
            return self.amplitude * np.sin(np.pi * (x - x_lo) / (x_hi - x_lo))
        raise DomainError(f"unknown perturbation shape {self.shape!r}")


def discrete_jet(u, dx: float):
    """Interior ``(y0, y1, y2)`` from central differences."""
    y0 = u[1:-1]
    y1 = (u[2:] - u[:-2]) / (2.0 * dx)
    y2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx**2
    return y0, y1, y2


def dynamics_residual(b1: float, u, dx: float):
    y0, y1, y2 = discrete_jet(u, dx)
    return y2 - b1 * y1**2 / y0


@dataclass
class DecayResult:
    times: list
    norms: list
    label: str
    monotone: bool
    decreased: bool
    exit_time: float | None = None
    exit_x: float | None = None
    settings: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.norms[-1] / self.norms[0] if self.norms[0] > 0 else float("nan")

    def to_csv(self) -> str:
        return grid_csv(["t", "residual_norm"], [self.times, self.norms])


def _region_exit(p: AttractorParams, u, x, dx):
    y0, y1, y2 = discrete_jet(u, dx)
    psi1, _, psi3, _ = psi_arrays(p, y0, y1, y2, regular=True)
    bad = ~((psi1 <= p.c1) & (psi3 >= p.c2))
    if np.any(bad):
        return float(x[1:-1][np.argmax(bad)])
    return None


def decay_experiment(
    p: AttractorParams,
    base: SolutionField,
    perturbation: Perturbation = Perturbation(),
    x_lo: float = 0.0,
    x_hi: float = 2.0,
    N: int = 256,
    t_end: float = 2.0,
    outputs: int = 20,
    t0: float = 0.0,
    ripple: float = 0.05,
) -> DecayResult:
    """Evolve base + perturbation with the oracle and track ``sup |F[u]|`` over interior nodes.

    Dirichlet values are pinned to the base field.  The jet region is
    checked with the regular extension of ``a`` at every output time; leaving
    it makes the run "inconclusive" since the theorem's hypothesis no longer
    holds.  Otherwise the label is "attracted" when the norm decreases
    (monotonically up to ``ripple``) and "not-attracted" when it does not.
    """
    q, a = p.q, p.alpha

    def A(r):
        return q * np.asarray(r, dtype=float) ** a

    run = PdeRun(
        x_lo,
        x_hi,
        N,
        t_end,
        A,
        initial=lambda x: base(np.full_like(x, t0), x) + perturbation(x, x_lo, x_hi),
        boundary=pinned_boundary(base, x_lo, x_hi, t0),
        output_times=tuple(np.linspace(0.0, t_end, outputs + 1)[1:]),
    )
    out = solve(run)
    dx = run.dx
    norms, exit_time, exit_x = [], None, None
    for t, u in zip(out.times, out.snapshots):
        norms.append(float(np.max(np.abs(dynamics_residual(p.b1, u, dx)))))
        if exit_time is None:
            where = _region_exit(p, u, run.x, dx)
            if where is not None:
                exit_time, exit_x = float(t), where
    running = np.minimum.accumulate(norms)
    monotone = bool(all(n <= (1.0 + ripple) * m for n, m in zip(norms[1:], running[:-1])))
    decreased = norms[-1] < norms[0]
    if exit_time is not None:
        label = "inconclusive"
    elif decreased and monotone:
        label = "attracted"
    else:
        label = "not-attracted"
    settings = {
        "params": asdict(p),
        "perturbation": asdict(perturbation),
        "x_lo": x_lo,
        "x_hi": x_hi,
        "N": N,
        "t_end": t_end,
        "t0": t0,
        "base": base.name,
        "base_params": base.params,
    }
    return DecayResult(list(out.times), norms, label, monotone, decreased, exit_time, exit_x, settings)
