import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import FAMILIES, family_member
from linearize4.cli import case22_end_to_end, default_grid
from linearize4.construct import LinearTarget, PointTransformation, linearize
from linearize4.errors import InterpolationGap, StepCollapse
from linearize4.expr import ZERO, evaluate, num, parse, sym
from linearize4.lincheck import is_linearizable
from linearize4.odemodel import OdeCoefficients, residual_of_profile
from linearize4.reduction import PdeParams, closed_form, implicit_root, reduce
from linearize4.verify import (
    GridSpec,
    NumericProfile,
    condition_sample_oracle,
    implicit_jet,
    integrate_linear,
    invert_psi,
    pde_residual,
    pullback,
    richardson_estimate,
    rk4_solve,
    stencil_derivatives,
)


def P(*values):
    return PdeParams.from_tuple(values)


def const_target(a, b):
    return LinearTarget(num(a), num(b), num(a), num(b), None)


# ---------------------------------------------------------------- grid and profile


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1, 0)
    with pytest.raises(ValueError):
        GridSpec(0, 1, nx=8)
    with pytest.raises(ValueError):
        GridSpec(0, 1, margin=0)
    g = GridSpec(0, 1, nx=100, nt=20)
    X, T = g.mesh()
    assert X.shape == (100, 20) and T.shape == (100, 20)


def test_profile_validation_and_gap():
    with pytest.raises(ValueError):
        NumericProfile([0, 0, 1], [[0, 0, 0]])
    prof = NumericProfile([0.0, 1.0], [[0.0, 1.0], [1.0, 1.0]])
    assert prof.hermite(0.5) == pytest.approx(0.5)
    with pytest.raises(InterpolationGap):
        prof.hermite(1.5)


# ---------------------------------------------------------------- PDE residual


def test_case1_sinusoid_residual():
    p = P(0, 0, 0, 1, 0, 2, 1)
    assert pde_residual(closed_form("Case1", p, (1, 0, 0, 0)), p, GridSpec(-3, 3, nx=100, nt=20)) < 1e-10


def test_case1_hyperbolic_residual():
    p = P(0, 0, 0, 1, 0, Fraction(1, 2), 1)
    assert pde_residual(closed_form("Case1", p, (1, 2, 0, 1)), p, GridSpec(-2, 2, nx=50, nt=10)) < 1e-10


def test_case21b_implicit_residual():
    p = P(4, 3, 0, 1, 1, 1, 1)
    sd = closed_form("Case21b", p, (1, 1, Fraction(1, 5), Fraction(1, 10)))
    assert pde_residual(sd, p, GridSpec(0, 2, nx=100, nt=20)) < 1e-8


def test_perturbed_kappa_detected():
    p = P(0, 0, 0, 1, 1, 1, 1)
    sd = closed_form("Case21a", p, (1, 0, 0, 1))
    assert pde_residual(sd, p.replace(kappa=num(Fraction(11, 10))), GridSpec(-2, 2, nx=100, nt=20)) >= 0.01


def test_implicit_jet_against_finite_differences():
    Pe = parse("1 + s + s^2/5 + s^3/10")
    c = 1.0
    s0 = 0.4
    h = 1e-3
    ss = s0 + h * np.arange(-3, 4)
    u = implicit_root(c, 1.0, evaluate(Pe, {"s": ss}))
    d = stencil_derivatives(u, h)
    u0 = np.array([u[3]])
    jet = implicit_jet(Pe, c, u0, {"s": np.array([s0])})
    for k in range(3):
        assert jet[k][0] == pytest.approx(d[k + 1][0], rel=1e-5, abs=1e-6)


# ---------------------------------------------------------------- integrator


def test_polynomial_kernel():
    prof = integrate_linear(const_target(0, 0), [1, 1, 2, 6], (0.0, 2.0), h=0.05)
    t = prof.abscissae
    assert np.allclose(prof.columns[0], 1 + t + t**2 + t**3, rtol=0, atol=1e-10)
    assert np.allclose(prof.columns[3], 6, atol=1e-10)


def test_constant_beta_matches_characteristic_roots():
    prof = integrate_linear(const_target(0, -9), [1, 0, 0, 0], (0.0, 2.0), h=0.01)
    r = math.sqrt(3)
    t = prof.abscissae
    exact = (np.cosh(r * t) + np.cos(r * t)) / 2
    assert np.max(np.abs(prof.columns[0] - exact) / np.maximum(1, np.abs(exact))) < 1e-7


def test_two_sided_integration():
    prof = integrate_linear(const_target(0, 0), [1, 1, 2, 6], (-1.0, 1.0), t0=0.0, h=0.1)
    t = prof.abscissae
    assert t[0] == -1.0 and t[-1] == 1.0 and np.all(np.diff(t) > 0)
    assert np.allclose(prof.columns[0], 1 + t + t**2 + t**3, atol=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.integers(20, 60))
def test_rk4_fourth_order(n):
    coeffs = lambda t: (np.zeros_like(t), np.full_like(t, -9.0))  # noqa: E731
    ratio = richardson_estimate(coeffs, [1, 0, 0, 0], 0.0, 2.0, n) / richardson_estimate(coeffs, [1, 0, 0, 0], 0.0, 2.0, 2 * n)
    assert 8 <= ratio <= 32


def test_rk4_nodes():
    ts, ys = rk4_solve(lambda t: (np.zeros_like(t), np.zeros_like(t)), [0, 0, 0, 1], 0, 1, 10)
    assert ts.shape == (11,) and ys.shape == (11, 4)
    assert ys[-1, 0] == pytest.approx(1 / 6)


def test_step_collapse():
    with pytest.raises(StepCollapse):
        integrate_linear(const_target(0, -9), [1, 0, 0, 0], (0.0, 2.0), h=0.5, rtol=1e-300, max_halvings=2)


def test_t_form_and_phi_inversion_agree():
    p = P(4, 3, 1, 1, 1, 3, 1)
    tr, tg = linearize(reduce(p))
    xonly = LinearTarget(tg.lin_alpha_x, tg.lin_beta_x, None, None, tg.domain)
    a = integrate_linear(tg, [1, 0, 0, 0], (-1.0, 1.0), t0=0.0, h=0.05)
    b = integrate_linear(xonly, [1, 0, 0, 0], (-1.0, 1.0), t0=0.0, h=0.05, phi=tr.phi, bindings=p.values())
    assert np.allclose(a.columns[0], b.columns[0], rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------- stencils and pullback


def test_stencil_derivatives_of_sine():
    h = 1e-2
    x = np.arange(-10, 11) * h + 0.3
    d = stencil_derivatives(np.sin(x), h)
    xi = x[3:-3]
    assert np.allclose(d[1], np.cos(xi), atol=1e-8)
    assert np.allclose(d[2], -np.sin(xi), atol=1e-7)
    assert np.allclose(d[4], np.sin(xi), atol=1e-3)


def test_pullback_identity_reproduces_cubic():
    tr = PointTransformation(ZERO, sym("x"), sym("y"), ZERO)
    ts = np.linspace(-3, 3, 601)
    H = [1 + ts**3, 3 * ts**2, 6 * ts, 6 + 0 * ts, 0 * ts]
    prof = NumericProfile(ts, H)
    p = P(0, 0, 0, 1, 1, 1, 1)
    g = GridSpec(-2, 2, nx=81)
    out = pullback(tr, prof, p, g)
    assert np.max(np.abs(out.columns[0] - (1 + g.xs() ** 3))) < 1e-12


def test_pullback_case21b_inverts_quadratic():
    p = P(4, 3, 0, 1, 1, 1, 1)
    tr, _ = linearize(reduce(p))
    ts = np.linspace(-1, 10, 111)
    prof = NumericProfile(ts, [ts, np.ones_like(ts)])
    g = GridSpec(3, 5, nx=17)
    out = pullback(tr, prof, p, g)
    i = int(np.argmin(np.abs(g.xs() - 4)))
    assert out.columns[0][i] == pytest.approx(2.0, abs=1e-12)
    assert invert_psi(tr.psi, np.array([4.0]), np.array([4.0]), p.values())[0] == pytest.approx(2.0)


def test_forward_check_case21b():
    p = P(4, 3, 0, 1, 1, 1, 1)
    tr, _ = linearize(reduce(p))
    sd = closed_form("Case21b", p, (1, 1, Fraction(1, 5), Fraction(1, 10)))
    h = 0.05
    xs = np.arange(-10, 31) * h
    H = implicit_root(1.0, 1.0, evaluate(sd.formula, {"s": xs}))
    ut = evaluate(tr.psi, dict(p.values(), x=xs, y=H))
    d = stencil_derivatives(np.asarray(ut), h)
    assert np.max(np.abs(d[4])) < 1e-6


@settings(max_examples=3, deadline=None)
@given(st.integers(1, 10_000))
def test_case22_end_to_end_any_seed(seed):
    p = P(4, 3, Fraction(5, 4), 1, 1, Fraction(7, 2), 1)
    rows = case22_end_to_end(p, GridSpec(**default_grid("Case22", p)), seed=seed, trials=1)
    assert rows[0]["residual"] < 1e-5


def test_case22_pullback_wrong_params_fails():
    # the same target pulled back against a different equation is not a solution
    p = P(4, 3, Fraction(5, 4), 1, 1, Fraction(7, 2), 1)
    g = GridSpec(**default_grid("Case22", p))
    tr, tg = linearize(reduce(p))
    prof = integrate_linear(tg, [1, 0.1, 0, 0], (-3.0, 3.0), t0=0.0, h=1e-3)
    H = pullback(tr, prof, p, g)
    wrong = reduce(p.replace(kappa=num(4)))
    assert residual_of_profile(wrong, H, H.abscissae) > 1e-3


# ---------------------------------------------------------------- condition oracle


def test_oracle_case22_exact():
    c = reduce(PdeParams.symbolic())
    r = condition_sample_oracle(c, dict(alpha=4, beta=3, gamma=1, mu=1, nu=1, kappa=3, D=1))
    assert r.n_points == 50
    assert max(r.residuals) < 1e-10


def test_oracle_beta_perturbed():
    c = reduce(PdeParams.symbolic())
    r = condition_sample_oracle(c, dict(alpha=4, beta=3.01, gamma=1, mu=1, nu=1, kappa=3, D=1))
    assert r.residuals[1] > 1e-3
    assert max(r.residuals[2:]) < 1e-10


def test_oracle_all_zero():
    r = condition_sample_oracle(OdeCoefficients())
    assert r.residuals == [0.0] * 10


def test_oracle_agrees_with_lincheck():
    c = reduce(PdeParams.symbolic())
    rng = np.random.default_rng(8)
    for fam in FAMILIES:
        for bump in (0, Fraction(1, 100)):
            t = family_member(rng, fam)
            t["beta"] = Fraction(t["beta"]) + bump
            lin = is_linearizable(c, params=t, solve=False, exact=False)
            orc = condition_sample_oracle(c, t)
            assert lin.verdict == (max(orc.residuals) < 1e-8), (fam, t, orc.residuals)
