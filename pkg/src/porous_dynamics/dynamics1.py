"""First-order finite-dimensional dynamics ``y' = (C1 y + C2) / A(y)``.

For ``rho_t = (Q(rho))_xx`` with ``A = Q'`` the exact solution reads
``rho(t, x) = G^{-1}((x + alpha0) / C1 + t)`` where
``G' = A / (C1 (C1 rho + C2))``.  This module builds ``A`` for the van der
Waals isentropic and isenthalpic processes (or a plain power law), tabulates
and inverts ``G``, and labels the phase of every point of a (t, x) grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import thermo
from .errors import DomainError, NonMonotone, OutOfRange, PoleInInterval
from .fields import SolutionField, Validity, grid_csv
from .quadrature import adaptive_simpson, gauss_legendre
from .thermo import GasSpec

DEFAULT_INTERVAL = (0.05, 2.95)
KINDS = ("isentropic", "isenthalpic", "power_law")


@dataclass(frozen=True)
class ProcessSpec:
    """Thermodynamic process along which the gas flows.

    ``sigma0`` is the entropy level ``ln(T^(4n/3) (3v-1)^(8/3))``;
    ``eta0`` the specific enthalpy; ``(q, alpha)`` give ``A = q rho^alpha``.
    """

    kind: str
    gas: GasSpec = field(default_factory=GasSpec)
    sigma0: float | None = None
    eta0: float | None = None
    q: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown process kind {self.kind!r}")
        if self.kind == "isentropic" and self.sigma0 is None:
            raise DomainError("isentropic process needs sigma0")
        if self.kind == "isenthalpic" and self.eta0 is None:
            raise DomainError("isenthalpic process needs eta0")
        if self.kind == "power_law":
            if self.q is None or self.alpha is None:
                raise DomainError("power-law process needs q and alpha")
            if not self.q > 0:
                raise DomainError(f"power-law coefficient q={self.q} must be positive")

    @classmethod
    def isentropic(cls, sigma0: float, gas: GasSpec | None = None) -> ProcessSpec:
        return cls("isentropic", gas or GasSpec(), sigma0=sigma0)

    @classmethod
    def isenthalpic(cls, eta0: float, gas: GasSpec | None = None) -> ProcessSpec:
        return cls("isenthalpic", gas or GasSpec(), eta0=eta0)

    @classmethod
    def power_law(cls, q: float, alpha: float, gas: GasSpec | None = None) -> ProcessSpec:
        return cls("power_law", gas or GasSpec(), q=q, alpha=alpha)

    @property
    def is_van_der_waals(self) -> bool:
        return self.kind != "power_law"

    @property
    def entropy_factor(self) -> float:
        """``exp(3 sigma0 / (4 n))``."""
        return math.exp(3.0 * self.sigma0 / (4.0 * self.gas.n))

    def A(self, rho):
        if self.kind == "isentropic":
            return A_isentropic(rho, self)
        if self.kind == "isenthalpic":
            return A_isenthalpic(rho, self)
        return A_power_law(rho, self)

    def A_formula(self, rho):
        """``A`` without domain checks; accepts sympy symbols and complex arrays."""
        n, mob = self.gas.n, self.gas.mobility
        if self.kind == "isentropic":
            return _A_isentropic_formula(rho, self.entropy_factor, n, mob)
        if self.kind == "isenthalpic":
            return _A_isenthalpic_formula(rho, self.eta0, n, mob)
        return self.q * rho**self.alpha

    def dA(self, rho):
        """Complex-step derivative of ``A``."""
        h = 1e-30
        rho = np.asarray(rho, dtype=float)
        return np.imag(self.A_formula(rho + 1j * h)) / h

    def pressure(self, rho):
        if self.kind == "isentropic":
            return pressure_isentropic(rho, self)
        if self.kind == "isenthalpic":
            return pressure_isenthalpic(rho, self)
        raise DomainError("a bare power law carries no equation of state")

    def temperature(self, rho):
        rho = _check_rho(rho)
        n = self.gas.n
        if self.kind == "isentropic":
            return self.entropy_factor * (3.0 / rho - 1.0) ** (-2.0 / n)
        if self.kind == "isenthalpic":
            return 3.0 * (self.eta0 + 6.0 * rho) * (3.0 - rho) / (4.0 * n * (3.0 - rho) + 24.0)
        raise DomainError("a bare power law carries no equation of state")

    def describe(self) -> dict:
        return asdict(self)


def _check_rho(rho):
    arr = np.asarray(rho, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 3.0))):
        raise DomainError("van der Waals density must satisfy 0 < rho < 3")
    return arr


def _A_isentropic_formula(rho, E, n, mob):
    return mob * (-6 * rho**2 + 24 * E * (1 + 2 / n) * rho ** (2 / n + 1) * (3 - rho) ** (-2 - 2 / n))


def _A_isenthalpic_formula(rho, eta0, n, mob):
    poly = 3 * eta0 * (n + 2) + rho * (6 - 3 * n) * (6 + 3 * n) + 6 * n * rho**2 * (n + 1) - n**2 * rho**3
    return 6 * mob * rho / (6 + 3 * n - rho * n) ** 2 * poly


def A_isentropic(rho, spec: ProcessSpec):
    if spec.kind != "isentropic":
        raise DomainError("A_isentropic needs an isentropic process")
    rho = _check_rho(rho)
    return _A_isentropic_formula(rho, spec.entropy_factor, spec.gas.n, spec.gas.mobility)


def A_isenthalpic(rho, spec: ProcessSpec):
    if spec.kind != "isenthalpic":
        raise DomainError("A_isenthalpic needs an isenthalpic process")
    rho = _check_rho(rho)
    n = spec.gas.n
    if np.any(rho * n == 6 + 3 * n):
        raise DomainError("isenthalpic A has a pole at rho = (6 + 3n) / n")
    return _A_isenthalpic_formula(rho, spec.eta0, n, spec.gas.mobility)


def A_power_law(rho, spec: ProcessSpec):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise DomainError("power-law A needs rho > 0")
    return spec.q * rho**spec.alpha


def pressure_isentropic(rho, spec: ProcessSpec):
    rho = _check_rho(rho)
    n = spec.gas.n
    return 8.0 * spec.entropy_factor * (3.0 / rho - 1.0) ** (-1.0 - 2.0 / n) - 3.0 * rho**2


def pressure_isenthalpic(rho, spec: ProcessSpec):
    rho = _check_rho(rho)
    n = spec.gas.n
    return 3.0 * rho * (n * rho**2 + (6.0 - 3.0 * n) * rho + 2.0 * spec.eta0) / (6.0 + 3.0 * n - rho * n)


def isentropic_threshold(n: float) -> float:
    """Lower bound on ``exp(3 sigma0 / (4n))`` for a monotone G."""
    nu = 1.0 + 2.0 / n
    return (1.0 + nu) ** (1.0 + nu) * (2.0 - nu) ** (2.0 - nu) / (4.0 * nu)


def isenthalpic_threshold(n: float) -> float:
    """Lower bound on ``eta0`` for a monotone G."""
    return 2.0 * (n - 2.0) ** 2 * (2.0 * n + 5.0) / (3.0 * n * (n + 2.0))


@dataclass(frozen=True)
class InvertibilityReport:
    ok: bool
    threshold: float
    margin: float
    quantity: str
    value: float

    def diagnostic(self) -> str:
        verdict = "invertible" if self.ok else "G not invertible"
        return f"{verdict}: {self.quantity} = {self.value:.12g}, threshold {self.threshold:.12g}, margin {self.margin:.6g}"


def check_invertibility(spec: ProcessSpec) -> InvertibilityReport:
    n = spec.gas.n
    if spec.kind == "isentropic":
        thr = isentropic_threshold(n)
        val = spec.entropy_factor
        return InvertibilityReport(val > thr, thr, val - thr, "exp(3*sigma0/(4n))", val)
    if spec.kind == "isenthalpic":
        thr = isenthalpic_threshold(n)
        return InvertibilityReport(spec.eta0 > thr, thr, spec.eta0 - thr, "eta0", spec.eta0)
    raise DomainError("invertibility bounds exist for isentropic and isenthalpic processes only")


@dataclass(frozen=True)
class Dyn1Constants:
    C1: float
    C2: float = 0.0
    alpha0: float = 0.0
    rho_ref: float = 1.0
    """base point where G vanishes"""

    def __post_init__(self):
        if self.C1 == 0:
            raise DomainError("C1 must be nonzero")


@dataclass(frozen=True)
class MonotonicityCertificate:
    ok: bool
    sign: int
    min_abs_derivative: float
    samples: int
    change_location: float | None = None


def monotonicity_certificate(derivative, lo: float, hi: float, samples: int = 1000) -> MonotonicityCertificate:
    """Sign of G' on ``samples`` equally spaced points of ``[lo, hi]``."""
    rho = np.linspace(lo, hi, samples)
    d = derivative(rho)
    s = np.sign(d)
    if np.all(s > 0) or np.all(s < 0):
        return MonotonicityCertificate(True, int(s[0]), float(np.min(np.abs(d))), samples)
    flips = np.nonzero(s[1:] != s[:-1])[0]
    loc = float(rho[flips[0] + 1]) if flips.size else float(rho[np.argmin(np.abs(d))])
    return MonotonicityCertificate(False, 0, float(np.min(np.abs(d))), samples, loc)


class GFunction:
    """Antiderivative ``G`` of ``A / (C1 (C1 rho + C2))`` with ``G(rho_ref) = 0``.

    Node values come from adaptive Simpson on each panel; evaluation between
    nodes adds a 20-point Gauss-Legendre integral from the left node.
    Immutable after construction.
    """

    def __init__(self, spec, consts, lo, hi, panels=512, tol=1e-12, samples=1000):
        self.spec = spec
        self.consts = consts
        self.lo = float(lo)
        self.hi = float(hi)
        C1, C2 = consts.C1, consts.C2
        self._C1, self._C2 = C1, C2
        nodes = np.union1d(np.linspace(self.lo, self.hi, panels + 1), [consts.rho_ref])
        scalar = lambda r: float(self.derivative(r))  # noqa: E731
        pieces = np.array([adaptive_simpson(scalar, a, b, tol) for a, b in zip(nodes[:-1], nodes[1:])])
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        cum -= cum[np.searchsorted(nodes, consts.rho_ref)]
        self.nodes = nodes
        self.values = cum
        self.certificate = monotonicity_certificate(self.derivative, self.lo, self.hi, samples)

    def derivative(self, rho):
        C1, C2 = self._C1, self._C2
        return self.spec.A_formula(rho) / (C1 * (C1 * rho + C2))

    @property
    def range(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())

    def _panel(self, rho):
        idx = np.searchsorted(self.nodes, rho, side="right") - 1
        return np.clip(idx, 0, self.nodes.size - 2)

    def _eval_in_panel(self, idx, rho):
        return self.values[idx] + gauss_legendre(self.derivative, self.nodes[idx], rho)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(~((rho >= self.lo) & (rho <= self.hi))):
            raise DomainError(f"G evaluated outside [{self.lo}, {self.hi}]")
        idx = self._panel(rho)
        out = np.where(rho == self.nodes[idx + 1], self.values[idx + 1], self._eval_in_panel(idx, rho))
        return out if out.ndim else float(out)

    def invert_masked(self, target):
        """``(rho, ok)``; ``ok`` is False where the target lies outside the range of G."""
        if not self.certificate.ok:
            raise NonMonotone("G is not monotone on its interval", self.certificate.change_location)
        target = np.asarray(target, dtype=float)
        gmin, gmax = self.range
        slack = 1e-12 * max(abs(gmin), abs(gmax), 1.0)
        ok = np.isfinite(target) & (target >= gmin - slack) & (target <= gmax + slack)
        tgt = np.where(ok, np.clip(target, gmin, gmax), 0.5 * (gmin + gmax))
        increasing = self.certificate.sign > 0
        vals = self.values if increasing else -self.values
        key = tgt if increasing else -tgt
        idx = np.clip(np.searchsorted(vals, key, side="right") - 1, 0, self.nodes.size - 2)
        a, b = self.nodes[idx], self.nodes[idx + 1]
        ga, gb = self.values[idx], self.values[idx + 1]
        rho = a + (tgt - ga) / (gb - ga) * (b - a)
        lo, hi = a.copy(), b.copy()
        for _ in range(100):
            res = self._eval_in_panel(idx, rho) - tgt
            # shrink the bracket, then Newton with a bisection fallback
            below = (res < 0) == increasing
            lo = np.where(below, np.maximum(lo, rho), lo)
            hi = np.where(below, hi, np.minimum(hi, rho))
            new = rho - res / self.derivative(rho)
            outside = ~((new >= lo) & (new <= hi))
            new = np.where(outside, 0.5 * (lo + hi), new)
            done = np.abs(new - rho) <= 2e-16 * np.abs(rho)
            rho = new
            if np.all(done):
                break
        rho = np.where(ok, rho, np.nan)
        return (rho, ok) if rho.ndim else (float(rho), bool(ok))

    def invert(self, target):
        rho, ok = self.invert_masked(target)
        if not np.all(ok):
            raise OutOfRange(f"target outside G range {self.range}")
        return rho


def G_build(
    spec: ProcessSpec,
    consts: Dyn1Constants,
    rho_interval: tuple[float, float] | None = None,
    *,
    panels: int = 512,
    tol: float = 1e-12,
    samples: int = 1000,
    require_monotone: bool = True,
) -> GFunction:
    lo, hi = rho_interval or DEFAULT_INTERVAL
    if not lo < hi:
        raise DomainError(f"empty density interval ({lo}, {hi})")
    if spec.is_van_der_waals and not (0 < lo and hi < 3):
        raise DomainError("van der Waals density interval must lie inside (0, 3)")
    if not lo <= consts.rho_ref <= hi:
        raise DomainError(f"rho_ref={consts.rho_ref} outside the interval [{lo}, {hi}]")
    pole = -consts.C2 / consts.C1
    if lo <= pole <= hi:
        raise PoleInInterval(f"C1*rho + C2 vanishes at rho={pole} inside [{lo}, {hi}]")
    G = GFunction(spec, consts, lo, hi, panels=panels, tol=tol, samples=samples)
    if require_monotone and not G.certificate.ok:
        raise NonMonotone(
            f"G' changes sign near rho={G.certificate.change_location}", G.certificate.change_location
        )
    return G


def G_invert(G: GFunction, target):
    return G.invert(target)


class FirstOrderSolution(SolutionField):
    """``rho(t, x) = G^{-1}((x + alpha0) / C1 + t)`` plus derived thermodynamics."""

    def __init__(self, spec: ProcessSpec, consts: Dyn1Constants, G: GFunction):
        self.spec = spec
        self.consts = consts
        self.G = G

        def raw(t, x):
            return G.invert_masked((x + consts.alpha0) / consts.C1 + t)

        super().__init__(
            raw=raw,
            validity=Validity(rho_range=(G.lo, G.hi)),
            name=f"first-order/{spec.kind}",
            params={"spec": spec.describe(), "consts": asdict(consts)},
        )

    def evaluate(self, t, x):
        # endpoints of the tabulated interval are admissible
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        rho, ok = self.raw(t, x)
        return np.where(ok, rho, np.nan), np.asarray(ok)

    def darcy_velocity(self, t, x):
        """Darcy velocity ``u = -Q_x / rho = -(C1 rho + C2) / rho``."""
        rho = self(t, x)
        return -(self.consts.C1 * rho + self.consts.C2) / rho

    def table(self, t_values, x_values, t_min: float = thermo.COEXISTENCE_T_MIN) -> dict:
        T, X = np.meshgrid(np.asarray(t_values, float), np.asarray(x_values, float), indexing="ij")
        rho, ok = self.evaluate(T, X)
        p = np.full(rho.shape, np.nan)
        temp = np.full(rho.shape, np.nan)
        labels = np.full(rho.shape, "", dtype=object)
        if self.spec.is_van_der_waals and np.any(ok):
            p[ok] = self.spec.pressure(rho[ok])
            temp[ok] = self.spec.temperature(rho[ok])
            labels[ok] = label_phases(1.0 / rho[ok], temp[ok], t_min=t_min)
        return {"t": T, "x": X, "rho": rho, "p": p, "T": temp, "phase": labels, "valid": ok}


def solve_first_order(
    spec: ProcessSpec,
    consts: Dyn1Constants,
    rho_interval: tuple[float, float] | None = None,
    G: GFunction | None = None,
) -> FirstOrderSolution:
    if G is None:
        G = G_build(spec, consts, rho_interval)
    return FirstOrderSolution(spec, consts, G)


PHASE_LABELS = ("gas", "liquid", "condensation", "unresolved")


def label_phases(v, T, t_min: float = thermo.COEXISTENCE_T_MIN) -> np.ndarray:
    """Gas / liquid / condensation by position of ``v`` relative to the coexistence volumes.

    At or above the critical temperature there is no condensation and the
    label follows the critical volume ``v = 1``.  Temperatures at or below
    ``t_min`` are reported as ``unresolved``.
    """
    v = np.asarray(v, dtype=float)
    T = np.asarray(T, dtype=float)
    v1, v2 = thermo.coexistence_volumes(T, t_min=t_min)
    out = np.where(v < 1.0, "liquid", "gas").astype(object)
    sub = (T > t_min) & (T < 1.0)
    out[sub & (v <= v1)] = "liquid"
    out[sub & (v >= v2)] = "gas"
    out[sub & (v > v1) & (v < v2)] = "condensation"
    out[T <= t_min] = "unresolved"
    return out


@dataclass
class PhaseMap:
    t: np.ndarray
    x: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    T: np.ndarray
    phase: np.ndarray
    valid: np.ndarray

    def to_csv(self) -> str:
        cols = [a.ravel() for a in (self.t, self.x, self.rho, self.p, self.T, self.phase, self.valid)]
        return grid_csv(["t", "x", "rho", "p", "T", "phase", "valid"], cols)


def phase_map(
    spec: ProcessSpec,
    consts: Dyn1Constants,
    t_values,
    x_values,
    rho_interval: tuple[float, float] | None = None,
    t_min: float = thermo.COEXISTENCE_T_MIN,
) -> PhaseMap:
    if not spec.is_van_der_waals:
        raise DomainError("phase maps need a van der Waals process")
    report = check_invertibility(spec)
    if not report.ok:
        raise NonMonotone(report.diagnostic())
    sol = solve_first_order(spec, consts, rho_interval)
    tab = sol.table(t_values, x_values, t_min=t_min)
    return PhaseMap(**tab)
