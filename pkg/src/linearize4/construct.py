"""Construction of the linearizing point transformation t = phi(x), u = psi(x, y).

chi = phi''/phi' solves the Riccati equation chi' = chi^2/2 + r(x) with
r = (8 C0 - 3 A0^2 - 12 A0x)/40; psi solves 4 psi_yy = psi_y A1 and
4 psi_xy = psi_y (A0 + 6 chi).  The target is u'''' + at(t) u' + bt(t) u = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    CompatibilityFailure,
    NotLinearizable,
    UnsupportedA1Shape,
    UnsupportedChi,
    YDependence,
)
from .expr import (
    ONE,
    ZERO,
    Expr,
    Kernel,
    Mul,
    Rational,
    add,
    as_expr,
    cancel,
    differentiate,
    evaluate,
    exp,
    mul,
    num,
    pow_,
    replace_subexpr,
    sample_test,
    substitute,
    sym,
    tan,
    tanh,
    to_string,
)
from .lincheck import is_linearizable
from .odemodel import OdeCoefficients

X, Y, T = sym("x"), sym("y"), sym("t")

# Construction checks sample free parameters on a positive range and x near
# the origin, so that square roots of parameter ratios and tan(kx) stay
# admissible.
DEFAULT_RANGES = {"x": (-0.7, 0.7), "y": (0.1, 2.0)}
PARAM_RANGE = (0.5, 2.0)


def _ranges(e: Expr, extra: dict | None = None) -> dict:
    out = {v: PARAM_RANGE for v in e.free_symbols if v not in DEFAULT_RANGES}
    out.update(DEFAULT_RANGES)
    out.update(extra or {})
    return out


def _is_zero(e: Expr, seed: int = 0, tol: float = 1e-9, ranges: dict | None = None) -> bool:
    return sample_test(e, seed=seed, tol=tol, ranges=_ranges(e, ranges)).zero


def _neg(e: Expr) -> Expr:
    return mul(num(-1), e)


def _sub(a: Expr, b: Expr) -> Expr:
    return add(a, _neg(b))


def _dx(e: Expr, n: int = 1) -> Expr:
    return differentiate(e, "x", n)


def _dy(e: Expr, n: int = 1) -> Expr:
    return differentiate(e, "y", n)


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class NumericRiccati:
    """chi' = chi^2/2 + r(x), chi(x0) = 0, integrated numerically (no closed form)."""

    r: Expr
    x0: float = 0.0
    bindings: tuple = ()

    def solve(self, xs, steps_per_unit: int = 2000) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        env = dict(self.bindings)

        def f(x, chi):
            env["x"] = x
            return 0.5 * chi * chi + float(evaluate(self.r, env))

        out = np.empty_like(xs)
        for i, target in enumerate(xs):
            n = max(1, int(math.ceil(abs(target - self.x0) * steps_per_unit)))
            h = (target - self.x0) / n
            x, chi = self.x0, 0.0
            for _ in range(n):
                k1 = f(x, chi)
                k2 = f(x + h / 2, chi + h * k1 / 2)
                k3 = f(x + h / 2, chi + h * k2 / 2)
                k4 = f(x + h, chi + h * k3)
                chi += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
                x += h
            out[i] = chi
        return out


@dataclass(frozen=True)
class PointTransformation:
    chi: Expr
    phi: Expr
    psi: Expr
    omega: Expr

    def to_dict(self) -> dict:
        return {k: to_string(getattr(self, k)) for k in ("chi", "phi", "psi", "omega")}


@dataclass(frozen=True)
class LinearTarget:
    lin_alpha_x: Expr
    lin_beta_x: Expr
    lin_alpha_t: Expr | None = None
    lin_beta_t: Expr | None = None
    domain: tuple | None = None  # (x_lo, x_hi) avoiding phi_x = 0 and poles, when numeric

    def to_dict(self) -> dict:
        f = lambda e: None if e is None else to_string(e)  # noqa: E731
        return {
            "alpha_x": f(self.lin_alpha_x),
            "beta_x": f(self.lin_beta_x),
            "alpha_t": f(self.lin_alpha_t),
            "beta_t": f(self.lin_beta_t),
            "domain": None if self.domain is None else list(self.domain),
        }


# ---------------------------------------------------------------- Riccati


def riccati_rhs(c: OdeCoefficients, seed: int = 0) -> Expr:
    """r(x) = (8 C0 - 3 A0^2 - 12 A0x)/40, checked to be free of y."""
    r = mul(Rational(Fraction(1, 40)), add(mul(num(8), c.C0), mul(num(-3), c.A0, c.A0), mul(num(-12), _dx(c.A0))))
    if "y" not in r.free_symbols:
        return r
    if not _is_zero(_dy(r), seed=seed):
        raise YDependence(f"Riccati right-hand side depends on y: {to_string(r)}")
    r2 = cancel(r)
    if "y" not in r2.free_symbols:
        return r2
    # fall back to freezing y at a value where r is defined
    for y0 in (0, 1, 2, -1):
        try:
            r3 = substitute(r, "y", y0)
        except ArithmeticError:
            continue
        if _is_zero(_sub(r, r3), seed=seed):
            return r3
    raise YDependence(f"could not eliminate y from {to_string(r)}")


def _constant_value(r: Expr) -> Expr | None:
    if "x" not in r.free_symbols:
        return r
    if _is_zero(_dx(r)):
        return substitute(r, "x", 0)
    return None


def solve_riccati(r: Expr, sign: int = 1, bindings: dict | None = None):
    """Particular solution of chi' = chi^2/2 + r with integration constant 0.

    For a symbolic constant r, ``sign`` states the sign of r (the parameter
    regime); numeric constants use their own sign.  A non-constant r yields a
    :class:`NumericRiccati` descriptor instead of an expression.
    """
    cst = _constant_value(r)
    if cst is None:
        return NumericRiccati(r, 0.0, tuple(sorted((bindings or {}).items())))
    if cst == ZERO:
        return ZERO
    s = int(np.sign(float(cst.value))) if isinstance(cst, Rational) else sign
    if s > 0:
        k = pow_(mul(cst, Rational(Fraction(1, 2))), Fraction(1, 2))
        return mul(num(2), k, tan(mul(k, X)))
    k = pow_(mul(cst, Rational(Fraction(-1, 2))), Fraction(1, 2))
    return mul(num(-2), k, tanh(mul(k, X)))


# ---------------------------------------------------------------- phi


def _split_kernel(chi: Expr, tags) -> tuple[Expr, Kernel] | None:
    """Write chi = a * K(u) with K one of ``tags`` and a free of x."""
    factors = chi.factors if isinstance(chi, Mul) else (chi,)
    ks = [f for f in factors if isinstance(f, Kernel) and f.tag in tags]
    if len(ks) != 1:
        return None
    k = ks[0]
    a = mul(*(f for f in factors if f is not k))
    if "x" in a.free_symbols:
        return None
    return a, k


def build_phi(chi: Expr, seed: int = 0) -> Expr:
    """phi with phi''/phi' = chi, for chi in {0, 2k tan(kx), -2k tanh(kx)}."""
    if chi == ZERO:
        phi = X
    else:
        split = _split_kernel(chi, ("tan", "tanh"))
        if split is None:
            raise UnsupportedChi(f"no closed-form phi for chi = {to_string(chi)}")
        a, k = split
        du = _dx(k.arg)
        if "x" in du.free_symbols or du == ZERO:
            raise UnsupportedChi(f"kernel argument {to_string(k.arg)} is not linear in x")
        want = mul(num(2 if k.tag == "tan" else -2), du)
        if not _is_zero(_sub(a, want), seed=seed):
            raise UnsupportedChi(f"chi = {to_string(chi)} is not of the form 2u' tan(u) or -2u' tanh(u)")
        phi = Kernel(k.tag, k.arg)
    px = _dx(phi)
    if not _is_zero(_sub(mul(_dx(px), pow_(px, -1)), chi), seed=seed):
        raise UnsupportedChi("postcondition phi''/phi' = chi failed")
    return phi


# ---------------------------------------------------------------- psi


def _y_factor(A1: Expr, seed: int) -> Expr:
    """g(y) with 4 g'' = A1 g', g(0) = 0, g'(0) normalised as in the reduction convention."""
    if A1 == ZERO:
        return Y
    if "x" in A1.free_symbols:
        raise UnsupportedA1Shape(f"A1 depends on x: {to_string(A1)}")
    L = cancel(mul(num(4), pow_(A1, -1)))  # g''/g' = 1/L
    m = _dy(L)
    if "y" in m.free_symbols or "x" in m.free_symbols or not isinstance(m, Rational) or m == ZERO:
        raise UnsupportedA1Shape(f"4/A1 = {to_string(L)} is not affine in y with rational slope")
    n = 1 / m.value  # g' = L^n
    if n == -1 or n.denominator not in (1, 2):
        raise UnsupportedA1Shape(f"unsupported exponent {n} for A1 = {to_string(A1)}")
    L0 = substitute(L, "y", 0)
    g = mul(_sub(pow_(L, n + 1), pow_(L0, n + 1)), Rational(1 / ((n + 1) * m.value)))
    return g


def _x_factor(A0: Expr, chi: Expr, seed: int) -> Expr:
    """k(x) with k'/k = (A0 + 6 chi)/4 and k(0) = 1."""
    if "y" in A0.free_symbols or "x" in A0.free_symbols:
        raise UnsupportedA1Shape(f"A0 must be constant for the supported psi shapes, got {to_string(A0)}")
    out = exp(mul(A0, X, Rational(Fraction(1, 4)))) if A0 != ZERO else ONE
    if chi == ZERO:
        return out
    split = _split_kernel(chi, ("tan", "tanh"))
    if split is None:
        raise UnsupportedChi(f"no closed-form psi factor for chi = {to_string(chi)}")
    a, kern = split
    k = _dx(kern.arg)
    e = cancel(mul(num(3), a, pow_(mul(num(2), k), -1)))  # 3a/(2k)
    if not isinstance(e, Rational):
        raise UnsupportedChi(f"exponent 3a/(2k) = {to_string(e)} is not a number")
    if kern.tag == "tan":
        # exp(int 3a/2 tan(kx) dx) = sec(kx)^(3a/(2k))
        return mul(out, pow_(Kernel("sec", kern.arg), e.value))
    # cosh(kx)^(3a/(2k)) = (1 - tanh(kx)^2)^(-3a/(4k))
    return mul(out, pow_(_sub(ONE, pow_(kern, 2)), -e.value / 2))


def psi_system_residuals(c: OdeCoefficients, chi: Expr, psi: Expr) -> tuple[Expr, Expr]:
    py = _dy(psi)
    r1 = _sub(mul(num(4), _dy(py)), mul(py, c.A1))
    r2 = _sub(mul(num(4), _dx(py)), mul(py, add(c.A0, mul(num(6), chi))))
    return r1, r2


def compatibility_residual(c: OdeCoefficients, chi: Expr, psi: Expr, omega: Expr | None = None) -> Expr:
    """1600 psi_xxxx minus the right-hand side of the fourth-order psi equation."""
    A0, A1, C0, D0, D1 = c.A0, c.A1, c.C0, c.D0, c.D1
    W = compute_omega(c) if omega is None else omega
    A0x, C0x, C0xx, D0y, D1x, Wx = _dx(A0), _dx(C0), _dx(C0, 2), _dy(D0), _dx(D1), _dx(W)
    px, pxx, pxxx, pxxxx, py = _dx(psi), _dx(psi, 2), _dx(psi, 3), _dx(psi, 4), _dy(psi)

    def lin(*pairs):
        return add(*(mul(num(k), *fs) for k, fs in pairs))

    rhs = add(
        mul(num(9600), pxxx, chi),
        mul(num(160), pxx, lin((-12, (A0x,)), (-3, (A0, A0)), (-90, (chi, chi)), (8, (C0,)))),
        mul(
            num(40),
            px,
            lin(
                (12, (A0x, A0)),
                (72, (A0x, chi)),
                (-16, (C0x,)),
                (3, (A0, A0, A0)),
                (18, (A0, A0, chi)),
                (-12, (A0, C0)),
                (120, (chi, chi, chi)),
                (-48, (chi, C0)),
                (24, (D1,)),
                (-8, (W,)),
            ),
        ),
        mul(
            psi,
            lin(
                (144, (A0x, A0x)),
                (72, (A0x, A0, A0)),
                (-352, (A0x, C0)),
                (-160, (C0xx,)),
                (-80, (C0x, A0)),
                (-1600, (D0y,)),
                (640, (D1x,)),
                (-80, (Wx,)),
                (9, (A0, A0, A0, A0)),
                (-88, (A0, A0, C0)),
                (160, (A0, D1)),
                (30, (A0, W)),
                (-400, (A1, D0)),
                (300, (chi, W)),
                (144, (C0, C0)),
            ),
        ),
        mul(num(1600), py, D0),
    )
    return _sub(mul(num(1600), pxxxx), rhs)


def build_psi(c: OdeCoefficients, chi: Expr, seed: int = 0, check: bool = True) -> Expr:
    """psi = k(x) g(y) solving the psi-system, with the fourth-order equation verified."""
    psi = mul(_x_factor(c.A0, chi, seed), _y_factor(c.A1, seed))
    if check:
        for i, r in enumerate(psi_system_residuals(c, chi, psi)):
            if not _is_zero(r, seed=seed + i):
                raise CompatibilityFailure(f"psi-system equation {i + 1} not satisfied by psi = {to_string(psi)}")
        if not _is_zero(compatibility_residual(c, chi, psi), seed=seed + 7):
            raise CompatibilityFailure(f"fourth-order psi equation not satisfied by psi = {to_string(psi)}")
    return psi


# ---------------------------------------------------------------- Omega and the target


def compute_omega(c: OdeCoefficients) -> Expr:
    A0, C0, D1 = c.A0, c.C0, c.D1
    A0x = _dx(A0)
    return add(
        mul(A0, A0, A0),
        mul(num(-4), A0, C0),
        mul(num(8), D1),
        mul(num(-8), _dx(C0)),
        mul(num(6), A0x, A0),
        mul(num(4), _dx(A0, 2)),
    )


def beta_bracket(c: OdeCoefficients, chi: Expr, omega: Expr) -> Expr:
    """Numerator bracket of the target coefficient bt (before division by 1600 phi_x^4)."""
    A0, A1, C0, D0, D1, W = c.A0, c.A1, c.C0, c.D0, c.D1, omega
    A0x, C0x, C0xx = _dx(A0), _dx(C0), _dx(C0, 2)
    terms = [
        (-144, (A0x, A0x)),
        (-72, (A0x, A0, A0)),
        (352, (A0x, C0)),
        (160, (C0xx,)),
        (80, (C0x, A0)),
        (1600, (_dy(D0),)),
        (-640, (_dx(D1),)),
        (80, (_dx(W),)),
        (-9, (A0, A0, A0, A0)),
        (88, (A0, A0, C0)),
        (-160, (A0, D1)),
        (-30, (A0, W)),
        (400, (A1, D0)),
        (-300, (chi, W)),
        (-144, (C0, C0)),
    ]
    return add(*(mul(num(k), *fs) for k, fs in terms))


def _t_form(e: Expr, phi: Expr) -> Expr | None:
    """Rewrite an x-expression in t = phi(x) when phi has a closed inverse."""
    if phi == X:
        return substitute(e, "x", T)
    if isinstance(phi, Kernel) and phi.tag == "tan":
        u = phi.arg
        root = pow_(add(ONE, pow_(T, 2)), Fraction(1, 2))
        out = replace_subexpr(
            e,
            {
                Kernel("tan", u): T,
                Kernel("sec", u): root,
                Kernel("cos", u): pow_(root, -1),
                Kernel("sin", u): mul(T, pow_(root, -1)),
            },
        )
    elif isinstance(phi, Kernel) and phi.tag == "tanh":
        out = replace_subexpr(e, {Kernel("tanh", phi.arg): T})
    else:
        return None
    return None if "x" in out.free_symbols else out


def _domain(phi: Expr) -> tuple | None:
    if isinstance(phi, Kernel) and phi.tag == "tan":
        k = _dx(phi.arg)
        if isinstance(k, Rational) or not k.free_symbols:
            kv = abs(float(evaluate(k, {})))
            half = math.pi / (2 * kv)
            return (-half, half)
        return None
    if phi == X or (isinstance(phi, Kernel) and phi.tag == "tanh"):
        return (-math.inf, math.inf)
    return None


def build_linear_target(c: OdeCoefficients, tr: PointTransformation, seed: int = 0) -> LinearTarget:
    px = _dx(tr.phi)
    a_x = cancel(mul(tr.omega, pow_(mul(num(8), pow_(px, 3)), -1)))
    bracket = beta_bracket(c, tr.chi, tr.omega)
    if "y" in bracket.free_symbols:
        if not _is_zero(_dy(bracket), seed=seed):
            raise YDependence("the target coefficient bracket depends on y")
        bracket = cancel(bracket)
        if "y" in bracket.free_symbols:
            bracket = substitute(bracket, "y", 0)
    b_x = mul(bracket, pow_(mul(num(1600), pow_(px, 4)), -1))
    return LinearTarget(a_x, b_x, _t_form(a_x, tr.phi), _t_form(b_x, tr.phi), _domain(tr.phi))


def linearize(
    c: OdeCoefficients,
    seed: int = 0,
    params: dict | None = None,
    sign: int = 1,
) -> tuple[PointTransformation, LinearTarget]:
    """Check the conditions, then build (chi, phi, psi, Omega) and the target coefficients."""
    if params:
        c = c.substitute({k: as_expr(v) for k, v in params.items()})
    report = is_linearizable(c, seed=seed, ranges=_ranges_for(c), solve=False)
    if not report.verdict:
        raise NotLinearizable(report)
    r = riccati_rhs(c, seed)
    chi = solve_riccati(r, sign=sign)
    if isinstance(chi, NumericRiccati):
        raise UnsupportedChi("Riccati equation has no closed-form solution; numeric chi only")
    phi = build_phi(chi, seed)
    psi = build_psi(c, chi, seed)
    omega = compute_omega(c)
    tr = PointTransformation(chi, phi, psi, omega)
    return tr, build_linear_target(c, tr, seed)


def _ranges_for(c: OdeCoefficients) -> dict:
    out = {v: PARAM_RANGE for v in c.parameters}
    out.update(DEFAULT_RANGES)
    return out


__all__ = [
    "NumericRiccati",
    "PointTransformation",
    "LinearTarget",
    "riccati_rhs",
    "solve_riccati",
    "build_phi",
    "build_psi",
    "psi_system_residuals",
    "compatibility_residual",
    "compute_omega",
    "beta_bracket",
    "build_linear_target",
    "linearize",
]
