"""Explicit conservative finite differences for ``rho_t = (Q(rho))_xx``.

Nodes ``x_i = x_lo + i dx`` for ``i = 0..N``.  The face flux
``A(mid) (rho_{i+1} - rho_i)`` is the midpoint-quadrature value of
``Q(rho_{i+1}) - Q(rho_i)``; it is exact when ``A`` is affine, which makes
the scheme exact on the alpha = 1 travelling wave.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NonParabolic, StabilityViolation
from .fields import SolutionField, grid_csv

MIN_CELLS = 16


@dataclass
class PdeRun:
    """One run of the oracle.

    ``boundary`` is either a pair of constants, a callable ``t -> (left, right)``,
    or the string ``"zero-flux"``.  ``initial`` is an array over the ``N + 1``
    nodes or a callable of ``x``.
    """

    x_lo: float
    x_hi: float
    N: int
    t_end: float
    A: Callable
    initial: object
    boundary: object = "zero-flux"
    safety: float = 0.9
    output_times: tuple = ()
    check_every: int = 100

    def __post_init__(self):
        if self.N < MIN_CELLS:
            raise DomainError(f"N={self.N} below the minimum of {MIN_CELLS} cells")
        if not self.t_end > 0:
            raise DomainError(f"t_end={self.t_end} must be positive")
        if not self.x_hi > self.x_lo:
            raise DomainError("empty spatial window")
        if not 0 < self.safety <= 1:
            raise DomainError(f"safety={self.safety} must lie in (0, 1]")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.N

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.N + 1)

    def initial_profile(self) -> np.ndarray:
        if callable(self.initial):
            rho = np.asarray(self.initial(self.x), dtype=float)
        else:
            rho = np.array(self.initial, dtype=float)
        if rho.shape != (self.N + 1,):
            raise DomainError(f"initial profile has shape {rho.shape}, expected ({self.N + 1},)")
        return rho

    def boundary_values(self, t: float):
        if isinstance(self.boundary, str):
            return None
        if callable(self.boundary):
            left, right = self.boundary(t)
        else:
            left, right = self.boundary
        return float(left), float(right)


@dataclass
class PdeState:
    t: float
    rho: np.ndarray


def _A_checked(A, rho):
    a = np.asarray(A(rho), dtype=float)
    if not (a.min() > 0 and a.max() < np.inf):
        bad = int(np.argmax(~np.isfinite(a) | (a <= 0)))
        raise NonParabolic(f"A(rho) <= 0 or non-finite at node {bad} (rho={np.ravel(rho)[bad]!r})")
    return a


def face_flux(A, rho) -> np.ndarray:
    """``A((rho_i + rho_{i+1}) / 2) (rho_{i+1} - rho_i)`` on the N faces."""
    return _A_checked(A, 0.5 * (rho[1:] + rho[:-1])) * np.diff(rho)


def reconstruct_Q(A, rho, base: float = 0.0) -> np.ndarray:
    """Nodal Q as a cumulative midpoint integral of A, starting from ``base`` at node 0."""
    return base + np.concatenate(([0.0], np.cumsum(face_flux(A, rho))))


def stable_dt(run: PdeRun, rho) -> float:
    return run.safety * run.dx**2 / (2.0 * float(np.max(_A_checked(run.A, rho))))


def step_explicit(run: PdeRun, state: PdeState, dt: float) -> PdeState:
    """Advance one forward-Euler step of size ``dt``."""
    bound = stable_dt(run, state.rho)
    if dt > bound * (1 + 1e-12):
        raise StabilityViolation(f"dt={dt!r} exceeds the stability bound {bound!r}")
    return _advance(run, state, dt, face_flux(run.A, state.rho))


def _advance(run: PdeRun, state: PdeState, dt: float, flux) -> PdeState:
    lam = dt / run.dx**2
    new = state.rho.copy()
    new[1:-1] += lam * np.diff(flux)
    t = state.t + dt
    bc = run.boundary_values(t)
    if bc is None:
        new[0] += 2.0 * lam * flux[0]
        new[-1] -= 2.0 * lam * flux[-1]
    else:
        new[0], new[-1] = bc
    return PdeState(t, new)


def zero_flux_mass(rho, dx: float) -> float:
    return dx * (0.5 * rho[0] + float(np.sum(rho[1:-1])) + 0.5 * rho[-1])


@dataclass
class PdeResult:
    x: np.ndarray
    times: list
    snapshots: list
    steps: int
    max_mass_defect: float
    max_principle_violations: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def to_csv(self) -> str:
        t = np.concatenate([np.full(self.x.size, ti) for ti in self.times])
        x = np.tile(self.x, len(self.times))
        rho = np.concatenate(self.snapshots)
        return grid_csv(["t", "x", "rho"], [t, x, rho])


def solve(run: PdeRun, dt: float | None = None) -> PdeResult:
    """Integrate to ``t_end``; snapshots at ``output_times`` (and at t_end).

    With ``dt=None`` the step is recomputed from the current state every
    step, otherwise a fixed step (trimmed to land on output times) is used.
    Mass bookkeeping: for zero-flux boundaries the trapezoid mass must be
    conserved; for Dirichlet boundaries the interior mass must change by
    exactly the face fluxes at the two ends.
    """
    rho = run.initial_profile()
    bc = run.boundary_values(0.0)
    if bc is not None:
        rho[0], rho[-1] = bc
    _A_checked(run.A, rho)
    state = PdeState(0.0, rho)
    targets = sorted({float(t) for t in run.output_times if 0 < t < run.t_end} | {float(run.t_end)})
    times, snaps = [0.0], [rho.copy()]
    lo, hi = float(np.min(rho)), float(np.max(rho))
    violations = []
    max_defect = 0.0
    steps = 0
    dx = run.dx
    zero_flux = bc is None
    for target in targets:
        while state.t < target:
            bound = run.safety * dx**2 / (2.0 * float(np.max(_A_checked(run.A, state.rho))))
            h = bound if dt is None else dt
            if h > bound * (1 + 1e-12):
                raise StabilityViolation(f"dt={h!r} exceeds the stability bound {bound!r}")
            remaining = target - state.t
            if h >= remaining * (1 - 1e-12):
                h = remaining
            elif dt is None and remaining < 2 * h:
                h = 0.5 * remaining
            flux = face_flux(run.A, state.rho)
            before = state.rho
            state = _advance(run, state, h, flux)
            if h == remaining:
                state.t = target
            steps += 1
            if zero_flux:
                defect = abs(zero_flux_mass(state.rho, dx) - zero_flux_mass(before, dx))
                scale = max(1.0, zero_flux_mass(np.abs(before), dx))
            else:
                expected = (h / dx) * (flux[-1] - flux[0])
                defect = abs(dx * (np.sum(state.rho[1:-1]) - np.sum(before[1:-1])) - expected)
                scale = max(1.0, dx * float(np.sum(np.abs(before[1:-1]))))
            max_defect = max(max_defect, defect / scale)
            lo = min(lo, float(state.rho[0]), float(state.rho[-1]))
            hi = max(hi, float(state.rho[0]), float(state.rho[-1]))
            if steps % run.check_every == 0:
                tol = 1e-12 * max(1.0, abs(hi), abs(lo))
                inner = state.rho[1:-1]
                if np.min(inner) < lo - tol or np.max(inner) > hi + tol:
                    violations.append(state.t)
        times.append(state.t)
        snaps.append(state.rho.copy())
    return PdeResult(run.x, times, snaps, steps, max_defect, violations)


def pinned_boundary(field_: SolutionField, x_lo: float, x_hi: float, t0: float = 0.0):
    ends = np.array([x_lo, x_hi])
    lo, hi = field_.validity.t_range

    def values(t):
        t = t0 + t
        rho, ok = field_.raw(np.full(2, t), ends)
        if not (ok.all() and lo <= t <= hi):
            raise DomainError(f"{field_.name}: boundary values undefined at t={t!r}")
        return rho

    return values


def run_against_field(
    field_: SolutionField,
    A: Callable,
    x_lo: float,
    x_hi: float,
    N: int,
    t_end: float,
    t0: float = 0.0,
    safety: float = 0.9,
    output_times: tuple = (),
) -> tuple[PdeRun, PdeResult]:
    """Run from ``field_(t0, .)`` with Dirichlet values pinned to the field.

    The oracle's clock starts at 0, so ``t0`` shifts the field's time.
    """
    run = PdeRun(
        x_lo,
        x_hi,
        N,
        t_end,
        A,
        initial=lambda x: field_(np.full_like(x, t0), x),
        boundary=pinned_boundary(field_, x_lo, x_hi, t0),
        safety=safety,
        output_times=output_times,
    )
    return run, solve(run)


@dataclass
class FieldVerification:
    resolutions: list
    sup_errors: list
    order: float | None
    verdict: str

    def as_dict(self) -> dict:
        return {
            "resolutions": self.resolutions,
            "sup_errors": self.sup_errors,
            "residual_order": self.order,
            "verdict": self.verdict,
        }


def verify_field(
    field_: SolutionField,
    A: Callable,
    x_lo: float,
    x_hi: float,
    t_end: float,
    N: int = 32,
    t0: float = 0.0,
    roundoff: float = 1e-10,
) -> FieldVerification:
    """Grid refinement at N, 2N, 4N; observed order from the least-squares log-log slope."""
    res = [N, 2 * N, 4 * N]
    errs = []
    for n in res:
        run, out = run_against_field(field_, A, x_lo, x_hi, n, t_end, t0)
        exact = field_(np.full(run.x.size, t0 + t_end), run.x)
        errs.append(float(np.max(np.abs(out.final - exact))))
    if max(errs) <= roundoff:
        return FieldVerification(res, errs, None, "exact to round-off")
    slope = np.polyfit(np.log(res), np.log(errs), 1)[0]
    order = float(-slope)
    return FieldVerification(res, errs, order, f"order {order:.3f}")


def loglog_slope(s, values) -> float:
    return float(np.polyfit(np.log(s), np.log(values), 1)[0])


def blowup_slope(
    field_: SolutionField,
    A: Callable,
    x_lo: float,
    x_hi: float,
    C2: float,
    gaps=(0.5, 0.2, 0.1, 0.05, 0.02, 0.01),
    N: int = 64,
) -> tuple[float, list, list]:
    """Log-log slope of the oracle's interior max rho against ``C2 - t`` approaching blow-up."""
    times = tuple(sorted(C2 - g for g in gaps))
    run = PdeRun(
        x_lo,
        x_hi,
        N,
        times[-1],
        A,
        initial=lambda x: field_(np.zeros_like(x), x),
        boundary=pinned_boundary(field_, x_lo, x_hi),
        output_times=times,
    )
    out = solve(run)
    peaks = [float(np.max(s[1:-1])) for t, s in zip(out.times, out.snapshots) if t > 0]
    s = [C2 - t for t in out.times if t > 0]
    return loglog_slope(s, peaks), s, peaks


def descriptor_field(desc: dict):
    """``(field, A)`` for a run descriptor naming a closed-form field."""
    from .dynamics2 import Dyn2Spec, solution_field

    name = desc.get("field", "trwave")
    branch = {"trwave": "wave", "wave": "wave", "solution": "blowup", "blowup": "blowup"}.get(name)
    if branch is None:
        raise DomainError(f"unknown field {name!r}; expected trwave or blowup")
    spec = Dyn2Spec(
        q=float(desc.get("q", 1.0)),
        alpha=float(desc.get("alpha", 1.0)),
        branch=branch,
        C1=float(desc.get("C1", 0.5)),
        C2=float(desc.get("C2", 1.0 if branch == "wave" else 10.0)),
    )
    return solution_field(spec), spec.A


def run_descriptor(desc: dict) -> dict:
    """Execute a JSON run descriptor and return a JSON-ready report."""
    field_, A = descriptor_field(desc)
    x_lo, x_hi = float(desc.get("x_lo", 0.0)), float(desc.get("x_hi", 1.0))
    t_end = float(desc.get("t_end", 0.5))
    ver = verify_field(field_, A, x_lo, x_hi, t_end, N=int(desc.get("N", 32)))
    return {"descriptor": desc, **ver.as_dict()}


def load_descriptor(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def steps_estimate(run: PdeRun) -> int:
    return int(math.ceil(run.t_end / stable_dt(run, run.initial_profile())))
