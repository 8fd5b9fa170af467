from __future__ import annotations

import json
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from porous_dynamics.attractor import AttractorParams, coeff_a_regular, dynamics_pair, exact_bracket_coefficients, regular_a_function
from porous_dynamics.dynamics1 import isentropic_threshold
from porous_dynamics.dynamics2 import branch_b1
from porous_dynamics.jets import (
    X,
    Y,
    ArityError,
    JetFunction,
    JetPoint,
    first_order_pair,
    poisson_lie_bracket,
    sample_jets,
    sample_on_surface,
    second_order_pair,
    shuffle_apply,
    total_derivative,
    verify_dynamics,
)

y0, y1, y2, y3, y4 = Y
jet_coord = st.floats(-3, 3)


def test_total_derivative_examples():
    jet = JetPoint(2.0, (3.0, 5.0, 7.0))
    assert total_derivative(JetFunction.from_expr(y0), jet) == 5.0
    assert total_derivative(JetFunction.from_expr(y1**2), jet) == 2 * 5 * 7
    assert total_derivative(JetFunction.from_expr(X * y0), jet) == 13.0
    with pytest.raises(ArityError):
        total_derivative(JetFunction.from_expr(y2), jet)


POLYS = [y0**2 * y1 + X, sp.sin(y0) * y2, X * y1**3 - y0, sp.exp(y1 / 5) + y0 * y2**2]


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.lists(jet_coord, min_size=4, max_size=4), st.floats(-2, 2))
def test_total_derivative_linear_and_leibniz(x, y, c):
    jet = JetPoint(x, y)
    for f_expr, g_expr in zip(POLYS, POLYS[1:] + POLYS[:1]):
        f, g = JetFunction.from_expr(f_expr), JetFunction.from_expr(g_expr)
        lin = total_derivative(JetFunction.from_expr(f_expr + c * g_expr), jet)
        assert lin == pytest.approx(total_derivative(f, jet) + c * total_derivative(g, jet), rel=1e-9, abs=1e-9)
        prod = total_derivative(JetFunction.from_expr(f_expr * g_expr), jet)
        assert prod == pytest.approx(f(jet) * total_derivative(g, jet) + g(jet) * total_derivative(f, jet), rel=1e-9, abs=1e-9)


def test_finite_difference_partials_agree_with_analytic():
    rng = np.random.default_rng(1)
    for expr in POLYS:
        exact = JetFunction.from_expr(expr)
        numeric = JetFunction(exact.func, exact.order)
        for _ in range(20):
            jet = JetPoint(rng.uniform(-1, 1), rng.uniform(-3, 3, 4))
            for j in ["x", *range(exact.order + 1)]:
                a, n = exact.partial(j, jet), numeric.partial(j, jet)
                assert abs(a - n) <= 1e-6 * max(abs(a), 1.0)
        # the numeric total derivative goes through the same finite differences
        jet = JetPoint(0.3, (1.0, 2.0, -1.0, 0.5))
        assert numeric.total()(jet) == pytest.approx(exact.total()(jet), rel=1e-6, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.lists(st.floats(0.2, 3), min_size=5, max_size=5))
def test_bracket_antisymmetric(x, y):
    jet = JetPoint(x, y)
    phi = JetFunction.from_expr(y0**2 * y2 + y1)
    F = JetFunction.from_expr(y2 - sp.Rational(1, 3) * y1**2 / y0 + X)
    assert poisson_lie_bracket(phi, phi, jet) == 0.0
    ab, ba = poisson_lie_bracket(phi, F, jet), poisson_lie_bracket(F, phi, jet)
    assert abs(ab + ba) <= 1e-10 * max(1.0, abs(ab))


@pytest.mark.parametrize("alpha,branch", [(5 / 3, "wave"), (1.0, "blowup"), (-1 / 3, "blowup")])
def test_translation_bracket_vanishes_on_surface(alpha, branch):
    _, F = second_order_pair(1.2, alpha, branch_b1(branch, alpha))
    shift = JetFunction.from_expr(y1)
    for jet in sample_on_surface(F, 30, seed=3):
        assert abs(poisson_lie_bracket(shift, F, jet)) < 1e-9 * max(1.0, max(map(abs, jet.y)))


def test_on_surface_points_satisfy_constraints():
    _, F = second_order_pair(0.7, 5 / 3, -2 / 3)
    DF = F.total()
    for jet in sample_on_surface(F, 100, seed=0):
        assert 0.1 <= jet.y[0] <= 10 and -5 <= jet.y[1] <= 5
        scale = max(1.0, max(map(abs, jet.y)))
        assert abs(F(jet)) < 1e-12 * scale and abs(DF(jet)) < 1e-12 * scale


def test_bracket_arity():
    phi, F = second_order_pair(1.0, 1.0, 0.0)
    with pytest.raises(ArityError):
        poisson_lie_bracket(phi, F, JetPoint(0.0, (1.0, 1.0, 1.0)))


def vdw_isentropic_A(n: int, E: float):
    r = sp.Symbol("r", positive=True)
    p = 8 * E * (3 / r - 1) ** (-1 - sp.Rational(2, n)) - 3 * r**2
    A = sp.Lambda(r, r * sp.diff(p, r))
    return lambda s: A(s)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_first_order_dynamics_bracket(n):
    phi, F = first_order_pair(vdw_isentropic_A(n, 1.3 * isentropic_threshold(n)), 0.7, 0.3)
    rep = verify_dynamics(phi, F, samples=100, seed=n, tol=1e-8, y0_range=(0.1, 2.9))
    assert rep.passed, rep.to_json()


def test_first_order_power_law_bracket_and_mutation():
    q = 1.5
    phi, F = first_order_pair(lambda r: q * r ** sp.Rational(5, 3), 0.4, -0.2)
    assert verify_dynamics(phi, F, samples=50, tol=1e-8).passed
    # a right-hand side from a different A is not a symmetry
    phi_bad, _ = first_order_pair(lambda r: q * r**2, 0.4, -0.2)
    assert not verify_dynamics(phi_bad, F, samples=50, tol=1e-8).passed


@pytest.mark.parametrize("alpha", [5 / 3, 1.0, 1.4, -1 / 3])
@pytest.mark.parametrize("branch", ["wave", "blowup"])
def test_second_order_dynamics_pass(alpha, branch):
    p = AttractorParams(q=0.9, alpha=alpha, b1=branch_b1(branch, alpha))
    phi, F = dynamics_pair(p)
    assert verify_dynamics(phi, F, regular_a_function(p), 0.0, samples=100).passed
    a, b = exact_bracket_coefficients(p)
    rep = verify_dynamics(phi, F, a, b, samples=100, on_surface=False)
    assert rep.passed and rep.max_residual < 1e-12


@pytest.mark.parametrize("branch", ["wave", "blowup"])
def test_perturbed_coefficient_fails(branch):
    p = AttractorParams(q=0.9, alpha=5 / 3, b1=branch_b1(branch, 5 / 3))
    phi, F = dynamics_pair(p)
    a, b = exact_bracket_coefficients(p)
    rep = verify_dynamics(phi, F, lambda jet: a(jet) + 0.01, b, samples=100, on_surface=False)
    assert not rep.passed and rep.max_residual > 1e-4
    rep2 = verify_dynamics(phi, F, lambda jet: a(jet) + 0.02, b, samples=100, on_surface=False)
    assert rep2.max_residual == pytest.approx(2 * rep.max_residual, rel=0.05)


def test_mutated_b1_fails():
    p = AttractorParams(q=0.9, alpha=5 / 3, b1=branch_b1("wave", 5 / 3))
    phi, _ = dynamics_pair(p)
    _, F = second_order_pair(0.9, 5 / 3, p.b1 + 0.1)
    assert not verify_dynamics(phi, F, None, 0.0, samples=50).passed


def test_regular_a_against_formula_on_surface():
    p = AttractorParams(q=1.1, alpha=1.4, b1=branch_b1("blowup", 1.4))
    _, F = dynamics_pair(p)
    fn = regular_a_function(p)
    for jet in sample_on_surface(F, 10, seed=5):
        assert fn(jet) == pytest.approx(coeff_a_regular(p, *jet.y[:3]), rel=1e-13)


def test_shuffle_examples():
    jet = JetPoint(0.5, (1.0, 2.0, 3.0, 4.0, 5.0))
    assert shuffle_apply(JetFunction.from_expr(y1), jet) == (2.0, 3.0, 4.0, 5.0)
    assert shuffle_apply(JetFunction.constant(2.5), jet) == (2.5, 0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("alpha", [5 / 3, 1.0, -1 / 3])
def test_shuffle_matches_scaling_symmetry(alpha):
    q = 0.8
    _, F = second_order_pair(q, alpha, 1 - alpha / 2)
    phi2 = JetFunction.from_expr(q * (1 + sp.Float(alpha) / 2) * y0 ** sp.Float(alpha - 1) * y1**2)
    for jet in sample_on_surface(F, 10, seed=2):
        s0, s1 = shuffle_apply(phi2, jet, k=1)
        v0, v1 = jet.y[0], jet.y[1]
        c = q * (1 + alpha / 2) * v0 ** (alpha - 2) * v1**2
        assert s0 == pytest.approx(c * v0, rel=1e-12)
        assert s1 == pytest.approx(c * v1, rel=1e-12)


def test_report_json_and_seed():
    phi, F = second_order_pair(1.0, 1.0, 0.0)
    r1 = verify_dynamics(phi, F, None, 0.0, samples=20, seed=7)
    r2 = verify_dynamics(phi, F, None, 0.0, samples=20, seed=7)
    assert r1.to_json() == r2.to_json()
    d = json.loads(r1.to_json())
    assert {"max_residual", "argmax_jet", "pass"} <= set(d)
    assert sample_jets(3, seed=1) == sample_jets(3, seed=1)


def test_jet_point_limits():
    with pytest.raises(ValueError):
        JetPoint(0.0, tuple(range(6)))
    assert JetPoint(0.0, (1, 2)).padded() == (0.0, 1.0, 2.0, 0.0, 0.0, 0.0)
    assert math.isclose(JetPoint(1, (2,)).as_dict()["x"], 1.0)
