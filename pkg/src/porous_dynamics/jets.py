"""Numeric calculus on the jet space J^k with coordinates (x, y0, ..., yk).

Jet functions built from sympy expressions get exact partial derivatives
(and exact iterated total derivatives); plain callables fall back to
central differences.  Membership "modulo <F, DF, ...>" is checked by
sampling points of the zero set of F and its total derivatives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

MAX_ORDER = 4
X = sp.Symbol("x")
Y = sp.symbols(f"y0:{MAX_ORDER + 1}")


@dataclass(frozen=True)
class JetPoint:
    x: float
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if not 1 <= len(self.y) <= MAX_ORDER + 1:
            raise ValueError(f"jet carries y0..y{MAX_ORDER} at most, got {len(self.y)} coordinates")

    @property
    def order(self) -> int:
        return len(self.y) - 1

    def padded(self) -> tuple:
        return (self.x,) + self.y + (0.0,) * (MAX_ORDER + 1 - len(self.y))

    def as_dict(self) -> dict:
        return {"x": self.x, "y": list(self.y)}


class ArityError(ValueError):
    """The jet does not carry enough coordinates for the requested derivative."""


def _fd_step(v: float) -> float:
    return 1e-6 * max(1.0, abs(v))


class JetFunction:
    """A function on J^k, ``order`` being the highest y_j it depends on."""

    def __init__(self, func: Callable, order: int, partials: dict | None = None, expr=None, name: str = "f"):
        if not 0 <= order <= MAX_ORDER:
            raise ArityError(f"order {order} outside 0..{MAX_ORDER}")
        self.func = func
        self.order = order
        self.partials = partials or {}
        self.expr = expr
        self.name = name
        self._total = None

    @classmethod
    def from_expr(cls, expr, name: str = "f") -> JetFunction:
        expr = sp.sympify(expr)
        used = [j for j, s in enumerate(Y) if expr.has(s)]
        order = max(used) if used else 0
        args = (X,) + Y
        func = sp.lambdify(args, expr, "math")
        partials = {j: sp.lambdify(args, sp.diff(expr, Y[j]), "math") for j in range(order + 1)}
        partials["x"] = sp.lambdify(args, sp.diff(expr, X), "math")
        return cls(lambda jet: func(*jet.padded()), order, partials, expr=expr, name=name)

    @classmethod
    def constant(cls, c: float) -> JetFunction:
        return cls.from_expr(sp.Float(c), name=str(c))

    def _check(self, jet: JetPoint, extra: int = 0):
        if jet.order < self.order + extra:
            raise ArityError(f"{self.name} needs a jet of order {self.order + extra}, got {jet.order}")

    def __call__(self, jet: JetPoint) -> float:
        self._check(jet)
        return float(self.func(jet))

    def partial(self, j, jet: JetPoint) -> float:
        """``df/dy_j`` (``j="x"`` for the explicit x-derivative)."""
        self._check(jet)
        if j != "x" and j > self.order:
            return 0.0
        if j in self.partials:
            return float(self.partials[j](*jet.padded()))
        if j == "x":
            h = _fd_step(jet.x)
            return (self.func(JetPoint(jet.x + h, jet.y)) - self.func(JetPoint(jet.x - h, jet.y))) / (2 * h)
        h = _fd_step(jet.y[j])
        up, dn = list(jet.y), list(jet.y)
        up[j] += h
        dn[j] -= h
        return (self.func(JetPoint(jet.x, up)) - self.func(JetPoint(jet.x, dn))) / (2 * h)

    def total(self) -> JetFunction:
        """The total derivative D f as a new jet function of order ``order + 1``."""
        if self.order + 1 > MAX_ORDER:
            raise ArityError(f"total derivative of an order-{self.order} function exceeds y{MAX_ORDER}")
        if self._total is None:
            if self.expr is not None:
                self._total = JetFunction.from_expr(total_derivative_expr(self.expr), name=f"D({self.name})")
            else:
                self._total = JetFunction(lambda jet: total_derivative(self, jet), self.order + 1, name=f"D({self.name})")
        return self._total

    def total_power(self, m: int) -> JetFunction:
        f = self
        for _ in range(m):
            f = f.total()
        return f


def total_derivative_expr(expr):
    return sp.diff(expr, X) + sum(Y[j + 1] * sp.diff(expr, Y[j]) for j in range(MAX_ORDER))


def total_derivative(f: JetFunction, jet: JetPoint) -> float:
    """``D f = df/dx + sum_j y_{j+1} df/dy_j``; needs a jet one order above ``f``."""
    f._check(jet, extra=1)
    out = f.partial("x", jet)
    for j in range(f.order + 1):
        out += jet.y[j + 1] * f.partial(j, jet)
    return float(out)


def _bracket_terms(phi: JetFunction, F: JetFunction, jet: JetPoint):
    k = max(phi.order, F.order)
    need = 2 * k
    if jet.order < need:
        raise ArityError(f"bracket of order-{k} functions needs a jet of order {need}, got {jet.order}")
    plus, minus = [], []
    for j in range(k + 1):
        DjF = F.total_power(j)(jet)
        Djphi = phi.total_power(j)(jet)
        plus.append(phi.partial(j, jet) * DjF)
        minus.append(F.partial(j, jet) * Djphi)
    return plus, minus


def poisson_lie_bracket(phi: JetFunction, F: JetFunction, jet: JetPoint) -> float:
    """``[phi, F] = sum_j (dphi/dy_j D^j F - dF/dy_j D^j phi)``."""
    plus, minus = _bracket_terms(phi, F, jet)
    return float(sum(plus) - sum(minus))


def shuffle_apply(phi: JetFunction, jet: JetPoint, k: int | None = None) -> tuple:
    """Components ``(D^0 phi, ..., D^k phi)`` of the shuffle symmetry S_phi."""
    if k is None:
        k = max(jet.order - phi.order, 0)
    return tuple(phi.total_power(j)(jet) for j in range(k + 1))


def resolved_rhs(F: JetFunction) -> JetFunction:
    """``f`` for ``F = y_k - f``."""
    if F.expr is None:
        raise ValueError("resolved form needs a symbolic F")
    k = F.order
    f = sp.expand(Y[k] - F.expr)
    if f.has(Y[k]):
        raise ValueError(f"F is not of the form y{k} - f(x, y0..y{k - 1})")
    return JetFunction.from_expr(f, name=f"rhs({F.name})")


def sample_base(rng: np.random.Generator, n_free: int, y0_range=(0.1, 10.0), y1_range=(-5.0, 5.0)):
    """Free coordinates: log-uniform y0, uniform y1 and higher."""
    lo, hi = y0_range
    y = [float(np.exp(rng.uniform(np.log(lo), np.log(hi))))]
    for _ in range(1, n_free):
        y.append(float(rng.uniform(*y1_range)))
    return y


def sample_on_surface(F: JetFunction, samples: int = 100, seed: int = 0, y0_range=(0.1, 10.0), y1_range=(-5.0, 5.0)):
    """Points with F = 0 and D^m F = 0 up to order MAX_ORDER."""
    rng = np.random.default_rng(seed)
    k = F.order
    rhs = resolved_rhs(F)
    chain = [rhs]
    for _ in range(k, MAX_ORDER):
        chain.append(chain[-1].total())
    DF = F.total()
    jets = []
    for _ in range(samples):
        x = float(rng.uniform(-1.0, 1.0))
        y = sample_base(rng, k, y0_range, y1_range)
        for g in chain:
            y.append(g(JetPoint(x, y + [0.0] * (MAX_ORDER + 1 - len(y)))))
        jet = JetPoint(x, y)
        scale = max(1.0, max(abs(v) for v in y))
        if abs(F(jet)) > 1e-12 * scale or abs(DF(jet)) > 1e-12 * scale:
            raise ArithmeticError(f"on-surface sample off the zero set at {jet}")
        jets.append(jet)
    return jets


def sample_jets(samples: int = 100, seed: int = 0, y0_range=(0.1, 10.0), y1_range=(-5.0, 5.0)):
    """Generic (off-surface) jets of order MAX_ORDER."""
    rng = np.random.default_rng(seed)
    return [
        JetPoint(float(rng.uniform(-1.0, 1.0)), sample_base(rng, MAX_ORDER + 1, y0_range, y1_range))
        for _ in range(samples)
    ]


@dataclass
class DynamicsReport:
    max_residual: float
    argmax_jet: JetPoint
    passed: bool
    samples: int
    tol: float

    def as_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "argmax_jet": self.argmax_jet.as_dict(),
            "pass": self.passed,
            "samples": self.samples,
            "tol": self.tol,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _as_jet_callable(c):
    if c is None:
        return lambda jet: 0.0
    if isinstance(c, (int, float)):
        return lambda jet: float(c)
    return c


def verify_dynamics(
    phi: JetFunction,
    F: JetFunction,
    a=None,
    b=None,
    samples: int | list[JetPoint] = 100,
    seed: int = 0,
    tol: float = 1e-7,
    on_surface: bool = True,
    y0_range=(0.1, 10.0),
    y1_range=(-5.0, 5.0),
) -> DynamicsReport:
    """Relative residual of ``[phi, F] - a F - b DF`` over sampled jets.

    The scale is the sum of magnitudes of all bracket terms and of ``a F``
    and ``b DF`` at the jet, floored at 1 so that jets where every term
    vanishes (e.g. phi a multiple of F) compare absolutely.  On-surface sampling checks the bracket modulo
    ``<F, DF, ...>``; off-surface sampling checks the identity itself.
    """
    a_fn, b_fn = _as_jet_callable(a), _as_jet_callable(b)
    if isinstance(samples, int):
        if on_surface:
            jets = sample_on_surface(F, samples, seed, y0_range, y1_range)
        else:
            jets = sample_jets(samples, seed, y0_range, y1_range)
    else:
        jets = list(samples)
    DF = F.total()
    worst, worst_jet = -1.0, jets[0]
    for jet in jets:
        plus, minus = _bracket_terms(phi, F, jet)
        aF = a_fn(jet) * F(jet)
        bDF = b_fn(jet) * DF(jet)
        res = sum(plus) - sum(minus) - aF - bDF
        scale = sum(abs(v) for v in plus + minus) + abs(aF) + abs(bDF)
        rel = abs(res) / max(scale, 1.0)
        if not np.isfinite(rel):
            rel = np.inf
        if rel > worst:
            worst, worst_jet = rel, jet
    return DynamicsReport(float(worst), worst_jet, bool(worst < tol), len(jets), tol)


def first_order_pair(A_of, C1: float, C2: float):
    """``(phi, F)`` for ``F = y1 - (C1 y0 + C2) / A(y0)`` and ``phi = A y2 + A' y1^2``.

    ``A_of`` maps a sympy symbol to an expression for A.
    """
    A = A_of(Y[0])
    phi = JetFunction.from_expr(A * Y[2] + sp.diff(A, Y[0]) * Y[1] ** 2, name="phi")
    F = JetFunction.from_expr(Y[1] - (C1 * Y[0] + C2) / A, name="F")
    return phi, F


def second_order_pair(q: float, alpha: float, b1: float):
    """``(phi, F)`` for ``F = y2 - b1 y1^2 / y0`` and the right-hand side for ``A = q y0^alpha``."""
    A = q * Y[0] ** alpha
    phi = JetFunction.from_expr(A * Y[2] + sp.diff(A, Y[0]) * Y[1] ** 2, name="phi")
    F = JetFunction.from_expr(Y[2] - b1 * Y[1] ** 2 / Y[0], name="F")
    return phi, F
