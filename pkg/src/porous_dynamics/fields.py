"""Solution-field container and the discrete PDE residual used to check it."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Validity:
    rho_range: tuple[float, float] = (0.0, np.inf)
    t_range: tuple[float, float] = (-np.inf, np.inf)
    x_range: tuple[float, float] = (-np.inf, np.inf)
    singular_locus: str | None = None
    blowup_time: float | None = None

    def as_dict(self) -> dict:
        return {
            "rho_range": list(self.rho_range),
            "t_range": list(self.t_range),
            "x_range": list(self.x_range),
            "singular_locus": self.singular_locus,
            "blowup_time": self.blowup_time,
        }


@dataclass
class SolutionField:
    """Density field rho(t, x) with an explicit validity domain.

    ``raw(t, x)`` returns ``(rho, mask)`` for broadcast arrays; masked-out
    entries are NaN.  Calling the field raises instead of returning NaN.
    """

    raw: Callable
    validity: Validity
    name: str = "field"
    params: dict = field(default_factory=dict)

    def evaluate(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        rho, ok = self.raw(t, x)
        lo, hi = self.validity.rho_range
        ok = ok & (t >= self.validity.t_range[0]) & (t <= self.validity.t_range[1])
        ok = ok & (x >= self.validity.x_range[0]) & (x <= self.validity.x_range[1])
        ok = ok & np.isfinite(rho) & (rho >= lo) & (rho <= hi)
        return np.where(ok, rho, np.nan), ok

    def __call__(self, t, x):
        rho, ok = self.evaluate(t, x)
        if not np.all(ok):
            raise DomainError(f"{self.name}: {np.count_nonzero(~ok)} point(s) outside the validity domain")
        return rho if rho.ndim else float(rho)

    def profile(self, t: float, x):
        """Single-time profile ``(rho, valid)`` over the array ``x``."""
        return self.evaluate(np.full(np.shape(x), float(t)), x)


def pde_residual(field: SolutionField, A, dA, t, x, h: float, dt: float | None = None):
    """Discrete residual ``rho_t - A(rho) rho_xx - A'(rho) rho_x^2`` at ``(t, x)``.

    Space uses 3-point central differences with spacing ``h``, so the
    residual is O(h^2) for smooth fields and vanishes (up to round-off)
    whenever rho is quadratic in x.  Time uses a 4-point central difference
    with spacing ``dt`` (default ``h**2``), whose truncation error is
    negligible next to the spatial one.
    """
    if dt is None:
        dt = h * h
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    f = field.__call__
    r0 = f(t, x)
    rp, rm = f(t, x + h), f(t, x - h)
    rt = (f(t - 2 * dt, x) - 8 * f(t - dt, x) + 8 * f(t + dt, x) - f(t + 2 * dt, x)) / (12 * dt)
    rxx = (rp - 2 * r0 + rm) / h**2
    rx = (rp - rm) / (2 * h)
    return rt - A(r0) * rxx - dA(r0) * rx**2


def grid_csv(header: list[str], columns: list, fmt: str = ".17g") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_fmt(v, fmt) for v in row])
    return buf.getvalue()


def _fmt(v, fmt):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    return format(v, fmt)
