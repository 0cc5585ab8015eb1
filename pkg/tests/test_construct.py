import math
from fractions import Fraction

import numpy as np
import pytest

from linearize4.construct import (
    DEFAULT_RANGES,
    PARAM_RANGE,
    NumericRiccati,
    PointTransformation,
    build_linear_target,
    build_phi,
    build_psi,
    compatibility_residual,
    compute_omega,
    linearize,
    psi_system_residuals,
    riccati_rhs,
    solve_riccati,
)
from linearize4.errors import NotLinearizable, UnsupportedA1Shape, UnsupportedChi, YDependence
from linearize4.expr import (
    ZERO,
    add,
    differentiate,
    evaluate,
    is_identically_zero,
    kernel,
    mul,
    num,
    parse,
    pow_,
    sample_test,
    substitute,
    sym,
)
from linearize4.odemodel import OdeCoefficients
from linearize4.reduction import PARAM_NAMES, PdeParams, reduce

RANGES = {**{n: PARAM_RANGE for n in PARAM_NAMES}, **DEFAULT_RANGES}
NU = sym("nu")
CASE21A = reduce(PdeParams.symbolic(alpha=0, beta=0, gamma=0, kappa=parse("D^2")))
CASE21B = reduce(PdeParams.symbolic(alpha=mul(num(4), NU), beta=mul(num(3), NU), gamma=0, kappa=parse("D^2")))
CASE22 = reduce(PdeParams.symbolic(alpha=mul(num(4), NU), beta=mul(num(3), NU), kappa=parse("(2*gamma*mu + nu)*D^2/nu")))
K = parse("sqrt(gamma/(5*nu))")


def same(a, b, ranges=RANGES):
    return sample_test(add(a, mul(num(-1), b)), ranges=ranges).zero


# ---------------------------------------------------------------- Riccati


def test_riccati_rhs_case21_is_zero():
    assert riccati_rhs(CASE21A) == ZERO
    assert riccati_rhs(CASE21B) == ZERO


def test_riccati_rhs_case22_is_constant():
    r = riccati_rhs(CASE22)
    assert r == parse("2*gamma/(5*nu)")
    assert "y" not in r.free_symbols


def test_riccati_rhs_y_dependence():
    with pytest.raises(YDependence):
        riccati_rhs(OdeCoefficients(C0=sym("y")))


def test_solve_riccati_branches():
    assert solve_riccati(ZERO) == ZERO
    chi = solve_riccati(parse("2*gamma/(5*nu)"))
    assert chi == mul(num(2), K, kernel("tan", mul(K, sym("x"))))
    chi = solve_riccati(num(-2))
    assert chi == parse("-2*tanh(x)")
    # substitute back: chi' - chi^2/2 = -2 sech^2 - 2 tanh^2 = -2
    resid = add(differentiate(chi, "x"), mul(num(-1), pow_(chi, 2), pow_(num(2), -1)), num(2))
    assert is_identically_zero(resid)


def test_solve_riccati_numeric_fallback():
    sol = solve_riccati(parse("x"), bindings={})
    assert isinstance(sol, NumericRiccati)
    xs = np.linspace(0, 1, 11)
    chi = sol.solve(xs)
    # chi' = chi^2/2 + x from chi(0) = 0: chi ~ x^2/2 for small x
    assert chi[0] == 0 and chi[1] == pytest.approx(0.1**2 / 2, rel=1e-3)


# ---------------------------------------------------------------- phi


@pytest.mark.parametrize(
    "chi, phi",
    [("0", "x"), ("2*k*tan(k*x)", "tan(k*x)"), ("-2*tanh(x)", "tanh(x)")],
)
def test_build_phi_table(chi, phi):
    got = build_phi(parse(chi))
    assert got == parse(phi)
    px = differentiate(got, "x")
    ranges = {"k": (0.5, 1.0), "x": (-0.7, 0.7)}
    assert same(mul(differentiate(px, "x"), pow_(px, -1)), parse(chi), ranges)


def test_build_phi_rejects_other_shapes():
    with pytest.raises(UnsupportedChi):
        build_phi(parse("x^2"))


# ---------------------------------------------------------------- psi


def test_build_psi_identity():
    assert build_psi(CASE21A, ZERO) == sym("y")


def test_build_psi_case21b():
    psi = build_psi(CASE21B, ZERO)
    assert psi == parse("y^2/2 + (D^2*mu/nu)*y")


def test_build_psi_case22_and_system_residuals():
    chi = solve_riccati(riccati_rhs(CASE22))
    psi = build_psi(CASE22, chi)
    want = mul(pow_(kernel("sec", mul(K, sym("x"))), 3), parse("y^2/2 + (D^2*mu/nu)*y"))
    assert psi == want
    for r in psi_system_residuals(CASE22, chi, psi):
        assert sample_test(r, ranges=RANGES).zero
    assert sample_test(compatibility_residual(CASE22, chi, psi), ranges=RANGES).zero


def test_build_psi_rejects_other_a1():
    with pytest.raises(UnsupportedA1Shape):
        build_psi(OdeCoefficients(A1=parse("y^2")), ZERO)


# ---------------------------------------------------------------- omega and target


def test_omega_examples():
    assert compute_omega(CASE21A) == ZERO
    assert compute_omega(OdeCoefficients(C0=parse("2*gamma/nu"))) == ZERO
    assert compute_omega(OdeCoefficients(A0=sym("x"))) == parse("x^3 + 6*x")


def test_case21_targets_vanish():
    for c in (CASE21A, CASE21B):
        tr, tg = linearize(c)
        assert tg.lin_alpha_x == ZERO and tg.lin_beta_x == ZERO
        assert tr.omega == ZERO


def test_case22_target_and_t_form():
    tr, tg = linearize(CASE22)
    assert tg.lin_alpha_x == ZERO
    assert tg.lin_beta_x == mul(num(-9), pow_(kernel("cos", mul(K, sym("x"))), 8))
    assert tg.lin_beta_t == parse("-9*(1 + t^2)^(-4)")
    # lin_beta_t(phi(x)) reproduces lin_beta_x on |kx| < pi/2 - 0.1
    back = substitute(tg.lin_beta_t, "t", tr.phi)
    assert same(back, tg.lin_beta_x)
    rng = np.random.default_rng(0)
    g, n = 1.25, 1.0
    k = math.sqrt(g / (5 * n))
    for x in rng.uniform(-(math.pi / 2 - 0.1) / k, (math.pi / 2 - 0.1) / k, 50):
        b = dict(gamma=g, nu=n, mu=1.0, D=1.0, x=x)
        assert evaluate(back, b) == pytest.approx(evaluate(tg.lin_beta_x, b), rel=1e-12, abs=1e-14)


def test_transformation_invariants():
    for c in (CASE21A, CASE21B, CASE22):
        tr, _ = linearize(c)
        px = differentiate(tr.phi, "x")
        assert not is_identically_zero(px, ranges=RANGES)
        assert same(mul(differentiate(px, "x"), pow_(px, -1)), tr.chi)
        assert not is_identically_zero(differentiate(tr.psi, "y"), ranges=RANGES)


def test_alpha_scales_with_inverse_cube_of_phi_scale():
    c = OdeCoefficients(A0=sym("x"))  # nonzero Omega = x^3 + 6x
    tr = PointTransformation(ZERO, sym("x"), sym("y"), compute_omega(c))
    scaled = PointTransformation(ZERO, mul(num(3), sym("x")), sym("y"), tr.omega)
    a1 = build_linear_target(c, tr).lin_alpha_x
    a3 = build_linear_target(c, scaled).lin_alpha_x
    assert a1 != ZERO
    assert is_identically_zero(add(a3, mul(num(Fraction(-1, 27)), a1)))


def test_numeric_case22_build():
    p = PdeParams.from_tuple((4, 3, 1, 1, 1, 3, 1))
    tr, tg = linearize(reduce(p))
    assert tr.phi == parse("tan(x*sqrt(1/5))")
    assert tg.domain is not None and tg.domain[1] == pytest.approx(math.pi / 2 / math.sqrt(1 / 5))


def test_not_linearizable():
    p = PdeParams.from_tuple((1, 1, 1, 1, 1, 1, 1))
    with pytest.raises(NotLinearizable) as ei:
        linearize(reduce(p))
    assert 2 in ei.value.report.failed
