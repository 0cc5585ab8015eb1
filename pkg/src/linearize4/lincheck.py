"""The ten linearization conditions for the fourth-order class and their decision.

Numeric mode substitutes bound parameters and zero-tests each condition in
(x, y).  Symbolic mode additionally turns the conditions into polynomial
equations on the parameters and solves them by case splitting, which yields
the parameter families on which the equation is linearizable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import Inconclusive
from .expr import (
    ZERO,
    Add,
    Expr,
    Mul,
    Pow,
    Rational,
    Symbol,
    add,
    as_expr,
    differentiate,
    evaluate,
    mul,
    num,
    pow_,
    sample_test,
    substitute_many,
    to_string,
    together,
)
from .odemodel import OdeCoefficients

CONDITION_INDICES = tuple(range(1, 11))


def condition_set(c: OdeCoefficients) -> list[Expr]:
    """The ten condition expressions, in the fixed order 1..10."""
    return list(_condition_set(c))


@lru_cache(maxsize=256)
def _condition_set(c: OdeCoefficients) -> tuple[Expr, ...]:
    A1, A0, B0, C2, C1, C0 = c.A1, c.A0, c.B0, c.C2, c.C1, c.C0
    D4, D3, D2, D1, D0 = c.D4, c.D3, c.D2, c.D1, c.D0

    def d(e, *vs):
        for v in vs:
            e = differentiate(e, v)
        return e

    def lin(*pairs):
        return add(*(mul(num(k), *fs) if isinstance(fs, tuple) else mul(num(k), fs) for k, fs in pairs))

    A0x, A0y, A1x, A1y = d(A0, "x"), d(A0, "y"), d(A1, "x"), d(A1, "y")
    C0x, C0y, C1x, C1y, C2y = d(C0, "x"), d(C0, "y"), d(C1, "x"), d(C1, "y"), d(C2, "y")
    D2x, D1y, D1xy, D0y, D0yy = d(D2, "x"), d(D1, "y"), d(D1, "x", "y"), d(D0, "y"), d(D0, "y", "y")

    e6 = lin((1, A0y), (-1, A1x))
    e7 = lin((4, B0), (-3, A1))
    e8 = lin((12, A1y), (3, (A1, A1)), (-8, C2))
    e9 = lin((12, A1x), (3, (A0, A1)), (-4, C1))
    e10 = lin((32, C0y), (12, (A0x, A1)), (-16, C1x), (3, (A0, A0, A1)), (-4, (A0, C1)))
    e11 = lin((4, C2y), (1, (A1, C2)), (-24, D4))
    e12 = lin((4, C1y), (1, (A1, C1)), (-12, D3))
    e13 = lin((16, C1x), (-12, (A0x, A1)), (-3, (A0, A0, A1)), (4, (A0, C1)), (8, (A1, C0)), (-32, D2))
    e14 = lin(
        (192, D2x),
        (36, (A0x, A0, A1)),
        (-48, (A0x, C1)),
        (-48, (C0x, A1)),
        (-288, D1y),
        (9, (A0, A0, A0, A1)),
        (-12, (A0, A0, C1)),
        (-36, (A0, A1, C0)),
        (48, (A0, D2)),
        (32, (C0, C1)),
    )
    # the long condition: 384 D1xy - [bracket]
    p = lin((3, (A0, A1)), (-4, C1))  # 3 A0 A1 - 4 C1
    inner = add(
        mul(p, A0, A0),
        mul(num(16), lin((2, (A1, D1)), (1, (C0, C1)))),
        mul(num(-16), lin((1, (A1, C0)), (-1, D2)), A0),
    )
    bracket = add(
        mul(num(3), inner, A0),
        mul(
            num(-32),
            add(
                mul(num(4), lin((1, (C1, D1)), (-2, (C2, D0)), (1, (C0, D2)))),
                mul(lin((3, (A1, D0)), (-1, (C0, C0))), A1),
            ),
        ),
        mul(num(-96), D1y, A0),
        mul(num(384), D0y, A1),
        mul(num(1536), D0yy),
        mul(num(-16), p, C0x),
        mul(num(12), add(mul(p, A0), mul(num(-4), lin((1, (A1, C0)), (-4, D2)))), A0x),
    )
    e15 = add(mul(num(384), D1xy), mul(num(-1), bracket))
    return (e6, e7, e8, e9, e10, e11, e12, e13, e14, e15)


# ---------------------------------------------------------------- report


@dataclass(frozen=True)
class ConditionResult:
    index: int
    expression: Expr
    satisfied: bool
    max_residual: float
    failure: str | None = None


@dataclass
class LinearizationReport:
    conditions: list[ConditionResult]
    verdict: bool
    parameters: dict = field(default_factory=dict)
    constraints: list | None = None  # symbolic mode: list of ConstraintBranch

    @property
    def failed(self) -> list[int]:
        return [r.index for r in self.conditions if not r.satisfied]

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "conditions": [
                {
                    "index": r.index,
                    "expression": to_string(r.expression),
                    "satisfied": r.satisfied,
                    "max_residual": r.max_residual,
                    **({"failure": r.failure} if r.failure else {}),
                }
                for r in self.conditions
            ],
        }
        if self.constraints is not None:
            out["constraints"] = [b.to_dict() for b in self.constraints]
        return out


def is_linearizable(
    c: OdeCoefficients,
    seed: int = 0,
    params: dict | None = None,
    tol: float = 1e-9,
    ranges: dict | None = None,
    solve: bool = True,
    exact: bool = True,
) -> LinearizationReport:
    """Zero-test every condition.

    With ``params`` the bound parameters are substituted exactly first and
    only (x, y) is sampled; ``exact=False`` instead binds them as floats at
    evaluation time (much faster for parameter sweeps, no exact cancellation).
    Without ``params``, all free parameters are sampled as well, and (if
    ``solve``) the parameter constraints are derived and attached.
    """
    exprs = condition_set(c)
    bound = {k: as_expr(v) for k, v in (params or {}).items()}
    fixed = None
    if bound and not exact:
        fixed = {k: float(evaluate(v, {})) for k, v in bound.items()}
    results = []
    for i, e in zip(CONDITION_INDICES, exprs):
        if bound and exact:
            e = substitute_many(e, bound)
        try:
            r = sample_test(e, ("x", "y"), seed=seed + i, ranges=ranges, tol=tol, exact_first=fixed is None, fixed=fixed)
            results.append(ConditionResult(i, e, r.zero, r.max_residual))
        except Inconclusive as exc:
            # never certify a condition that could not be sampled
            results.append(ConditionResult(i, e, False, float("nan"), failure=f"inconclusive: {exc}"))
    verdict = all(r.satisfied for r in results)
    constraints = None
    leftover = set().union(*(e.free_symbols for e in exprs)) - {"x", "y"} - set(bound)
    if solve and leftover:
        constraints = solve_constraints(constraint_equations([r.expression for r in results]))
    return LinearizationReport(results, verdict, {k: to_string(v) for k, v in bound.items()}, constraints)


# ---------------------------------------------------------------- constraint equations

INDEPENDENT = frozenset({"x", "y"})


def _atoms_exponents(t: Expr) -> tuple[Fraction, list[tuple[Expr, int]]]:
    factors = t.factors if isinstance(t, Mul) else (t,)
    coeff = Fraction(1)
    out = []
    for f in factors:
        if isinstance(f, Rational):
            coeff *= f.value
        elif isinstance(f, Pow) and f.exp.denominator == 1 and f.exp > 0:
            out.append((f.base, int(f.exp)))
        else:
            out.append((f, 1))
    return coeff, out


def constraint_equations(conditions: list[Expr]) -> list[Expr]:
    """Parameter equations: coefficients of the (x, y)-monomials of every condition numerator."""
    eqs: list[Expr] = []
    seen = set()
    for e in conditions:
        n, _ = together(e)
        if n == ZERO:
            continue
        groups: dict[tuple, list[Expr]] = {}
        for t in n.terms if isinstance(n, Add) else (n,):
            coeff, parts = _atoms_exponents(t)
            indep = tuple(sorted((a._key, k) for a, k in parts if a.free_symbols & INDEPENDENT))
            rest = [pow_(a, k) for a, k in parts if not (a.free_symbols & INDEPENDENT)]
            groups.setdefault(indep, []).append(mul(Rational(coeff), *rest))
        for key in sorted(groups):
            q = add(*groups[key])
            if q != ZERO and q._key not in seen:
                seen.add(q._key)
                eqs.append(q)
    return eqs


# ---------------------------------------------------------------- case-splitting solver

DEFAULT_PRIORITY = ("kappa", "beta", "alpha", "gamma", "nu", "mu", "D")
DEFAULT_NONZERO = ("mu", "D")


@dataclass(frozen=True)
class ConstraintBranch:
    """One solution family: ``assignments`` hold, ``nonzero`` symbols are nonzero."""

    assignments: tuple[tuple[str, Expr], ...]
    nonzero: tuple[str, ...]
    unresolved: tuple[Expr, ...] = ()

    @property
    def as_dict(self) -> dict[str, Expr]:
        return dict(self.assignments)

    def to_dict(self) -> dict:
        return {
            "assignments": {k: to_string(v) for k, v in self.assignments},
            "nonzero": list(self.nonzero),
            "unresolved": [to_string(e) for e in self.unresolved],
        }

    def describe(self) -> str:
        parts = [f"{k} != 0" for k in self.nonzero]
        parts += [f"{k} = {to_string(v)}" for k, v in self.assignments]
        parts += [f"{to_string(e)} = 0" for e in self.unresolved]
        return ", ".join(parts)

    def holds(self, values: dict, tol: float = 1e-9) -> bool:
        """Numeric membership within absolute tolerance ``tol``."""
        for k in self.nonzero:
            if abs(float(values[k])) <= tol:
                return False
        for k, e in self.assignments:
            try:
                rhs = evaluate(e, values)
            except ArithmeticError:
                return False
            if abs(float(values[k]) - rhs) > tol:
                return False
        for e in self.unresolved:
            if abs(evaluate(e, values)) > tol:
                return False
        return True


def _poly_terms(e: Expr) -> list[tuple[Fraction, dict[str, int]]] | None:
    """Terms of a polynomial in plain symbols, or None if ``e`` is not one."""
    out = []
    for t in e.terms if isinstance(e, Add) else (e,):
        coeff, parts = _atoms_exponents(t)
        mono: dict[str, int] = {}
        for a, k in parts:
            if not isinstance(a, Symbol):
                return None
            mono[a.name] = mono.get(a.name, 0) + k
        out.append((coeff, mono))
    return out


def _from_terms(terms) -> Expr:
    return add(*(mul(Rational(c), *(pow_(Symbol(v), k) for v, k in m.items())) for c, m in terms))


class _State:
    def __init__(self, eqs, assign, nonzero_exprs, nonzero_vars):
        self.eqs = eqs
        self.assign = assign
        self.nonzero_exprs = nonzero_exprs
        self.nonzero_vars = nonzero_vars


def _strip(e: Expr, nonzero: frozenset) -> Expr | None:
    """Clear denominators and divide out monomial content in known-nonzero symbols.

    Returns None if the equation is infeasible (a nonzero constant or a
    monomial in known-nonzero symbols).
    """
    n, _ = together(e)
    if n == ZERO:
        return ZERO
    terms = _poly_terms(n)
    if terms is None:
        return n
    content = {v: min(m.get(v, 0) for _, m in terms) for v in nonzero}
    terms = [(c, {v: k - content.get(v, 0) for v, k in m.items() if k - content.get(v, 0)}) for c, m in terms]
    if len(terms) == 1 and all(v in nonzero for v in terms[0][1]):
        return None
    lead = terms[0][0]
    return _from_terms([(c / lead, m) for c, m in terms])


def _leading_var(terms, priority) -> str | None:
    present = set().union(*(m.keys() for _, m in terms))
    for v in priority:
        if v in present:
            return v
    rest = sorted(present)
    return rest[0] if rest else None


def _linear_split(terms, v):
    """(coefficient terms of v^1, rest terms) if ``v`` enters with degree 1, else None."""
    coef, rest = [], []
    for c, m in terms:
        k = m.get(v, 0)
        if k > 1:
            return None
        if k == 1:
            coef.append((c, {u: j for u, j in m.items() if u != v}))
        else:
            rest.append((c, m))
    return coef, rest


def _simplify(state: _State) -> _State | None:
    assign = state.assign
    nz_vars = set(state.nonzero_vars)
    nz_exprs = []
    for e in state.nonzero_exprs:
        e = substitute_many(e, assign) if assign else e
        n, _ = together(e)
        if n == ZERO:
            return None
        terms = _poly_terms(n)
        if terms is not None and len(terms) == 1:
            nz_vars.update(terms[0][1])
        elif not isinstance(n, Rational):
            nz_exprs.append(n)
    for v in nz_vars:
        if v in assign and isinstance(assign[v], Rational) and assign[v] == ZERO:
            return None
    eqs = []
    seen = set()
    for e in state.eqs:
        e = substitute_many(e, assign) if assign else e
        s = _strip(e, frozenset(nz_vars))
        if s is None:
            return None
        if s != ZERO and s._key not in seen:
            seen.add(s._key)
            eqs.append(s)
    return _State(eqs, assign, nz_exprs, frozenset(nz_vars))


def _assign(state: _State, v: str, value: Expr) -> _State:
    new = {k: substitute_many(e, {v: value}) for k, e in state.assign.items()}
    new[v] = value
    if v in state.nonzero_vars:
        # a symbol known to be nonzero is now an expression known to be nonzero
        return _State(state.eqs, new, state.nonzero_exprs + [value], state.nonzero_vars - {v})
    return _State(state.eqs, new, state.nonzero_exprs, state.nonzero_vars)


def _nonzero(state: _State, v: str) -> _State:
    return _State(state.eqs, state.assign, state.nonzero_exprs, state.nonzero_vars | {v})


def _branch_monomial(state, variables, priority):
    """Split a product of unknown symbols being zero: v1 = 0 | v1 != 0, v2 = 0 | ..."""
    order = sorted(variables, key=lambda v: priority.index(v) if v in priority else len(priority))
    out = []
    known = state
    for v in order:
        out.append(_assign(known, v, ZERO))
        known = _nonzero(known, v)
    return out


def _step(state: _State, priority) -> list[_State] | None:
    """One solver move; returns successor states, or None if stuck."""
    nz = state.nonzero_vars
    parsed = [(e, _poly_terms(e)) for e in state.eqs]
    parsed = [(e, t) for e, t in parsed if t is not None]
    # 1. a single monomial: one of its symbols vanishes
    for _, terms in parsed:
        if len(terms) == 1:
            vs = [v for v in terms[0][1] if v not in nz]
            if len(vs) == 1:
                return [_assign(state, vs[0], ZERO)]
            return _branch_monomial(state, vs, priority)
    # 2. leading symbol enters linearly with a coefficient known to be nonzero
    candidates = []
    for _, terms in parsed:
        v = _leading_var(terms, priority)
        split = _linear_split(terms, v)
        if split is None:
            continue
        coef, rest = split
        if len(coef) == 1 and all(u in nz for u in coef[0][1]):
            rank = priority.index(v) if v in priority else len(priority)
            candidates.append((rank, v, coef, rest))
    if candidates:
        _, v, coef, rest = min(candidates, key=lambda c: c[0])
        value = mul(num(-1), _from_terms(rest), pow_(_from_terms(coef), -1))
        return [_assign(state, v, value)]
    # 3. monomial content in an unknown symbol: branch on it
    best = None
    for _, terms in parsed:
        content = set(terms[0][1])
        for _, m in terms[1:]:
            content &= set(m)
        for v in content - nz:
            rank = priority.index(v) if v in priority else len(priority)
            if best is None or rank < best[0]:
                best = (rank, v)
    if best is not None:
        v = best[1]
        return [_assign(state, v, ZERO), _nonzero(state, v)]
    # 4. leading symbol linear with a monomial coefficient in unknown symbols
    for _, terms in parsed:
        v = _leading_var(terms, priority)
        split = _linear_split(terms, v)
        if split is None:
            continue
        coef, _ = split
        if len(coef) == 1:
            unknown = [u for u in coef[0][1] if u not in nz]
            if unknown:
                return _branch_monomial(state, unknown, priority) + [
                    _State(state.eqs, state.assign, state.nonzero_exprs, nz | set(unknown))
                ]
    return None


def solve_constraints(
    eqs: list[Expr],
    priority=DEFAULT_PRIORITY,
    nonzero=DEFAULT_NONZERO,
    split_on=("gamma",),
) -> list[ConstraintBranch]:
    """Case-split the polynomial system ``eqs = 0`` into solution families.

    ``nonzero`` symbols are assumed nonzero throughout.  After solving, every
    family is further split on each symbol of ``split_on`` that occurs in the
    system but is left undetermined (``s = 0`` versus ``s != 0``).
    """
    priority = tuple(priority)
    stack = [_State(list(eqs), {}, [], frozenset(nonzero))]
    leaves: list[_State] = []
    guard = 0
    while stack:
        guard += 1
        if guard > 10_000:
            raise RuntimeError("constraint solver did not terminate")
        st = _simplify(stack.pop())
        if st is None:
            continue
        if not st.eqs:
            leaves.append(st)
            continue
        nxt = _step(st, priority)
        if nxt is None:
            leaves.append(st)
            continue
        stack.extend(reversed(nxt))
    present = set().union(*(e.free_symbols for e in eqs)) if eqs else set()
    for s in (v for v in split_on if v in present):
        split = []
        for st in leaves:
            if s in st.assign or s in st.nonzero_vars:
                split.append(st)
                continue
            for cand in (_assign(st, s, ZERO), _nonzero(st, s)):
                cand = _simplify(cand)
                if cand is not None:
                    split.append(cand)
        leaves = split
    out = []
    for st in leaves:
        assigns = tuple(sorted(st.assign.items(), key=lambda kv: _rank(kv[0], priority)))
        nzv = tuple(sorted((v for v in st.nonzero_vars if v not in nonzero), key=lambda v: _rank(v, priority)))
        out.append(ConstraintBranch(assigns, nzv, tuple(st.eqs)))
    return out


def _rank(v: str, priority) -> int:
    return priority.index(v) if v in priority else len(priority)


__all__ = [
    "condition_set",
    "ConditionResult",
    "LinearizationReport",
    "is_linearizable",
    "constraint_equations",
    "ConstraintBranch",
    "solve_constraints",
]
