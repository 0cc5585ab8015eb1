"""Traveling-wave reduction of the fourth-order Boussinesq-type PDE

    u_tt = kappa u_xx + 2 gamma (u_x^2 + u u_xx) + nu u u_xxxx + mu u_xxtt
           + alpha u_x u_xxx + beta u_xx^2

to an ODE of the linearizable class, case classification and closed-form
solution families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BranchUndefined, DiscriminantNegative, DomainError, FrequencyDomain
from .expr import (
    ZERO,
    Expr,
    Rational,
    add,
    as_expr,
    cos,
    evaluate,
    exp,
    mul,
    num,
    pow_,
    sin,
    sqrt,
    substitute_many,
    sym,
    to_string,
)
from .odemodel import OdeCoefficients

PARAM_NAMES = ("alpha", "beta", "gamma", "mu", "nu", "kappa", "D")
CASES = ("Case1", "Case21a", "Case21b", "Case22", "NotLinearizable")


@dataclass(frozen=True)
class PdeParams:
    """The PDE constants alpha, beta, gamma, mu, nu, kappa and the wave speed D."""

    alpha: Expr
    beta: Expr
    gamma: Expr
    mu: Expr
    nu: Expr
    kappa: Expr
    D: Expr

    def __post_init__(self):
        for name in PARAM_NAMES:
            object.__setattr__(self, name, as_expr(getattr(self, name)))

    @classmethod
    def symbolic(cls, **overrides) -> "PdeParams":
        vals = {name: sym(name) for name in PARAM_NAMES}
        vals.update(overrides)
        return cls(**vals)

    @classmethod
    def from_tuple(cls, values) -> "PdeParams":
        return cls(*values)

    def as_dict(self) -> dict[str, Expr]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @property
    def is_numeric(self) -> bool:
        return all(isinstance(getattr(self, n), Rational) for n in PARAM_NAMES)

    def values(self) -> dict[str, float]:
        """Float values; raises ValueError if any parameter is symbolic."""
        out = {}
        for name in PARAM_NAMES:
            e = getattr(self, name)
            if not isinstance(e, Rational):
                raise ValueError(f"parameter {name} = {to_string(e)} is not numeric")
            out[name] = float(e.value)
        return out

    def symbol_bindings(self) -> dict[str, Expr]:
        """Mapping used to specialise expressions written in the parameter symbols."""
        return {n: e for n, e in self.as_dict().items() if e != sym(n)}

    def replace(self, **kw) -> "PdeParams":
        d = self.as_dict()
        d.update(kw)
        return PdeParams(**d)


def _denominator(p: PdeParams) -> Expr:
    return add(mul(p.nu, sym("y")), mul(p.mu, p.D, p.D))


def reduce(p: PdeParams) -> OdeCoefficients:
    """Traveling-wave ODE of the class for u = H(x - D t), with x the phase and y = H."""
    inv = pow_(_denominator(p), -1)
    y = sym("y")
    c0 = add(mul(num(2), p.gamma, y), p.kappa, mul(num(-1), p.D, p.D))
    return OdeCoefficients(
        A1=mul(p.alpha, inv),
        B0=mul(p.beta, inv),
        C0=mul(c0, inv),
        D2=mul(num(2), p.gamma, inv),
    )


def reduced_ode_terms(p: dict, y, y1, y2, y3, y4) -> list:
    """Additive terms of the traveling-wave ODE before division by nu*H + mu*D^2."""
    a, b, g, m, n, k, d = (p[name] for name in PARAM_NAMES)
    lead = n * y + m * d * d
    if np.any(np.abs(lead) < 1e-12):
        raise DomainError("nu*H + mu*D^2 vanishes", point={"H": y})
    return [lead * y4, a * y1 * y3, b * y2 * y2, (2 * g * y + k - d * d) * y2, 2 * g * y1 * y1]


def reduced_ode_residual(p: PdeParams, H: Callable, grid) -> float:
    """Max relative residual of the traveling-wave ODE, evaluated directly (not via the class form)."""
    xs = np.asarray(grid, dtype=float)
    jet = [np.broadcast_to(np.asarray(v, dtype=float), xs.shape) for v in H(xs)]
    terms = reduced_ode_terms(p.values(), *jet)
    scale = np.max(np.abs(np.array(terms)), axis=0)
    return float(np.max(np.abs(sum(terms)) / (1.0 + scale)))


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class CaseTag:
    tag: str
    residuals: dict = field(default_factory=dict)  # constraint name -> |lhs - rhs|
    constraints: tuple = ()  # symbolic mode: ConstraintBranch families

    def __str__(self):
        return self.tag


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def classify(p: PdeParams, tol: float = 1e-9) -> CaseTag:
    """Case tag with precedence Case1 -> the gamma = 0 subcases -> Case22.

    Symbolic parameters return tag "Symbolic" with the constraint families.
    """
    if not p.is_numeric:
        from .lincheck import constraint_equations, condition_set, solve_constraints

        eqs = constraint_equations(condition_set(reduce(p)))
        return CaseTag("Symbolic", {}, tuple(solve_constraints(eqs)))
    v = p.values()
    a, b, g, m, n, k, d = (v[name] for name in PARAM_NAMES)
    res = {
        "nu": abs(n),
        "gamma": abs(g),
        "alpha": abs(a),
        "beta": abs(b),
        "alpha-4nu": abs(a - 4 * n),
        "beta-3nu": abs(b - 3 * n),
        "kappa-D^2": abs(k - d * d),
    }
    zero = lambda x: abs(x) <= tol  # noqa: E731
    if zero(n):
        if zero(a) and zero(b) and zero(g) and not zero(m * d * d):
            return CaseTag("Case1", res)
        return CaseTag("NotLinearizable", res)
    kappa22 = (2 * g * m + n) * d * d / n
    res["kappa-(2gamma mu+nu)D^2/nu"] = abs(k - kappa22)
    if zero(g):
        if zero(b) and zero(a) and _close(k, d * d, tol):
            return CaseTag("Case21a", res)
        if _close(b, 3 * n, tol) and _close(a, 4 * n, tol) and _close(k, d * d, tol):
            return CaseTag("Case21b", res)
        return CaseTag("NotLinearizable", res)
    if _close(a, 4 * n, tol) and _close(b, 3 * n, tol) and _close(k, kappa22, tol):
        return CaseTag("Case22", res)
    return CaseTag("NotLinearizable", res)


# ---------------------------------------------------------------- solution families

S = sym("s")
_HALF = pow_(num(2), -1)


@dataclass(frozen=True)
class SolutionDescriptor:
    """A traveling-wave solution in the phase s = x - D t.

    explicit kinds: u = formula(s).  implicit-quadratic: u^2/2 + c u = formula(s).
    linear-target-only: no closed form; ``target`` holds the transformation data.
    """

    kind: str
    case: str
    constants: tuple
    formula: Expr | None
    params: PdeParams
    c: Expr | None = None
    extension: str | None = None
    target: object = None

    def u_expr(self) -> Expr:
        """The explicit solution as an expression in x and t (explicit kinds only)."""
        if self.kind not in ("explicit-sinusoid", "explicit-cubic", "explicit-hyperbolic", "explicit-affine"):
            raise ValueError(f"{self.kind} has no explicit formula")
        return substitute_many(self.formula, {"s": add(sym("x"), mul(num(-1), self.params.D, sym("t")))})

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "case": self.case,
            "constants": [to_string(c) for c in self.constants],
            "formula": None if self.formula is None else to_string(self.formula),
        }
        if self.kind == "implicit-quadratic":
            out["relation"] = f"u^2/2 + ({to_string(self.c)})*u = {to_string(self.formula)}"
        if self.extension:
            out["extension"] = self.extension
        return out


def _cubic(constants) -> Expr:
    return add(*(mul(c, pow_(S, i)) for i, c in enumerate(constants)))


def closed_form(tag, p: PdeParams, constants=(0, 0, 0, 0)) -> SolutionDescriptor:
    """Closed-form traveling-wave family for the given case tag and integration constants."""
    tag = str(tag)
    cs = tuple(as_expr(c) for c in constants)
    if len(cs) != 4:
        raise ValueError("exactly four integration constants are required")
    if tag == "Case1":
        c1, c2, c3, c4 = cs
        affine = add(c3, mul(c4, S))
        w2 = mul(add(p.kappa, mul(num(-1), p.D, p.D)), pow_(mul(p.mu, p.D, p.D), -1))
        if w2 == ZERO or (isinstance(w2, Rational) and w2.value == 0):
            if c1 == ZERO and c2 == ZERO:
                return SolutionDescriptor("explicit-affine", tag, cs, affine, p)
            raise FrequencyDomain("kappa = D^2 gives zero frequency; only the affine part C3 + C4 s survives")
        if isinstance(w2, Rational) and w2.value < 0:
            w = sqrt(mul(num(-1), w2))
            # C1 sinh(w s) + C2 cosh(w s) written with exponentials
            ep, em = exp(mul(w, S)), exp(mul(num(-1), w, S))
            osc = add(mul(c1, _HALF, add(ep, mul(num(-1), em))), mul(c2, _HALF, add(ep, em)))
            return SolutionDescriptor("explicit-hyperbolic", tag, cs, add(osc, affine), p, extension="hyperbolic branch for (kappa - D^2)/(mu D^2) < 0")
        w = sqrt(w2)
        osc = add(mul(c1, sin(mul(w, S))), mul(c2, cos(mul(w, S))))
        return SolutionDescriptor("explicit-sinusoid", tag, cs, add(osc, affine), p)
    if tag == "Case21a":
        return SolutionDescriptor("explicit-cubic", tag, cs, _cubic(cs), p)
    if tag == "Case21b":
        c = mul(p.D, p.D, p.mu, pow_(p.nu, -1))
        return SolutionDescriptor("implicit-quadratic", tag, cs, _cubic(cs), p, c=c)
    if tag == "Case22":
        from .construct import linearize

        target = linearize(reduce(p))
        return SolutionDescriptor("linear-target-only", tag, cs, None, p, target=target)
    raise ValueError(f"no closed form for {tag}")


def _phase_bindings(sd: SolutionDescriptor, x, t) -> dict:
    b = sd.params.values()
    b["s"] = np.asarray(x, dtype=float) - b["D"] * np.asarray(t, dtype=float)
    return b


def implicit_root(c: float, nu: float, P):
    """Root of u^2/2 + c u = P on the branch nu*u + mu*D^2 = nu*(u + c) > 0."""
    P = np.asarray(P, dtype=float)
    disc = c * c + 2.0 * P
    if np.any(disc < 0):
        raise DiscriminantNegative("c^2 + 2 P(s) < 0", point={"P": float(np.ravel(P)[np.argmin(np.ravel(disc))])})
    if np.any(disc == 0):
        raise BranchUndefined("both roots coincide at nu*u + mu*D^2 = 0")
    root = -c + np.sign(nu) * np.sqrt(disc)
    return float(root) if root.ndim == 0 else root


def evaluate_solution(sd: SolutionDescriptor, x, t):
    """u(x, t) for explicit and implicit descriptors (numeric parameters)."""
    if sd.kind == "linear-target-only":
        raise ValueError("no closed form: integrate the linear target instead (verify module)")
    b = _phase_bindings(sd, x, t)
    if sd.kind == "implicit-quadratic":
        P = evaluate(sd.formula, b)
        return implicit_root(evaluate(sd.c, b), b["nu"], P)
    return evaluate(sd.formula, b)


__all__ = [
    "PARAM_NAMES",
    "PdeParams",
    "reduce",
    "reduced_ode_terms",
    "reduced_ode_residual",
    "CaseTag",
    "classify",
    "SolutionDescriptor",
    "closed_form",
    "evaluate_solution",
    "implicit_root",
]
