from __future__ import annotations

from .core import (
    ONE,
    ZERO,
    Add,
    Expr,
    Kernel,
    Mul,
    Pow,
    Rational,
    Symbol,
    add,
    as_expr,
    kernel,
    mul,
    pow_,
)


def differentiate(e: Expr, v: str, n: int = 1) -> Expr:
    """Exact partial derivative of ``e`` with respect to symbol ``v`` (``n`` times)."""
    for _ in range(n):
        e = _diff(e, v, {})
    return e


def _diff(e: Expr, v: str, memo: dict) -> Expr:
    if v not in e.free_symbols:
        return ZERO
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Symbol):
        out = ONE
    elif isinstance(e, Add):
        out = add(*(_diff(t, v, memo) for t in e.terms))
    elif isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = _diff(f, v, memo)
            if df != ZERO:
                parts.append(mul(*fs[:i], df, *fs[i + 1 :]))
        out = add(*parts)
    elif isinstance(e, Pow):
        out = mul(Rational(e.exp), pow_(e.base, e.exp - 1), _diff(e.base, v, memo))
    else:
        out = mul(_kernel_derivative(e), _diff(e.arg, v, memo))
    memo[e] = out
    return out


def _kernel_derivative(k: Kernel) -> Expr:
    u = k.arg
    tag = k.tag
    if tag == "sin":
        return kernel("cos", u)
    if tag == "cos":
        return mul(Rational(-1), kernel("sin", u))
    if tag == "tan":
        return pow_(kernel("sec", u), 2)
    if tag == "sec":
        return mul(kernel("sec", u), kernel("tan", u))
    if tag == "tanh":
        return add(ONE, mul(Rational(-1), pow_(kernel("tanh", u), 2)))
    if tag == "exp":
        return kernel("exp", u)
    if tag == "ln":
        return pow_(u, -1)
    raise ValueError(f"no derivative rule for {tag}")


def substitute(e: Expr, s: str, replacement) -> Expr:
    """Replace every occurrence of symbol ``s`` by ``replacement`` and renormalise."""
    return substitute_many(e, {s: as_expr(replacement)})


def substitute_many(e: Expr, mapping: dict) -> Expr:
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    if not mapping:
        return e
    return _subs(e, mapping, frozenset(mapping), {})


def _subs(e: Expr, mapping: dict, names: frozenset, memo: dict) -> Expr:
    if not (e.free_symbols & names):
        return e
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Symbol):
        out = mapping[e.name]
    elif isinstance(e, Add):
        out = add(*(_subs(t, mapping, names, memo) for t in e.terms))
    elif isinstance(e, Mul):
        out = mul(*(_subs(f, mapping, names, memo) for f in e.factors))
    elif isinstance(e, Pow):
        out = pow_(_subs(e.base, mapping, names, memo), e.exp)
    else:
        out = kernel(e.tag, _subs(e.arg, mapping, names, memo))
    memo[e] = out
    return out


def replace_subexpr(e: Expr, mapping: dict[Expr, Expr]) -> Expr:
    """Replace whole subtrees (matched structurally) and renormalise."""
    hit = mapping.get(e)
    if hit is not None:
        return hit
    if isinstance(e, (Rational, Symbol)):
        return e
    if isinstance(e, Add):
        return add(*(replace_subexpr(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(replace_subexpr(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return pow_(replace_subexpr(e.base, mapping), e.exp)
    return kernel(e.tag, replace_subexpr(e.arg, mapping))


def is_constant_in(e: Expr, names) -> bool:
    return not (e.free_symbols & frozenset(names))


def polynomial_degree(e: Expr, v: str) -> int | None:
    """Degree of ``e`` in symbol ``v`` if ``e`` is polynomial in ``v`` (after expansion), else None."""
    if v not in e.free_symbols:
        return 0
    if isinstance(e, Symbol):
        return 1
    if isinstance(e, Add):
        degs = [polynomial_degree(t, v) for t in e.terms]
        return None if any(d is None for d in degs) else max(degs)
    if isinstance(e, Mul):
        total = 0
        for f in e.factors:
            d = polynomial_degree(f, v)
            if d is None:
                return None
            total += d
        return total
    if isinstance(e, Pow) and isinstance(e.base, Symbol) and e.exp.denominator == 1 and e.exp > 0:
        return int(e.exp)
    return None


def coefficients_in(e: Expr, v: str) -> list[Expr]:
    """Coefficients ``[c0, c1, ...]`` of ``e`` as a polynomial in symbol ``v``."""
    deg = polynomial_degree(e, v)
    if deg is None:
        raise ValueError(f"{e} is not polynomial in {v}")
    buckets: list[list[Expr]] = [[] for _ in range(deg + 1)]
    terms = e.terms if isinstance(e, Add) else (e,)
    for t in terms:
        factors = t.factors if isinstance(t, Mul) else (t,)
        k = 0
        rest = []
        for f in factors:
            if isinstance(f, Symbol) and f.name == v:
                k += 1
            elif isinstance(f, Pow) and isinstance(f.base, Symbol) and f.base.name == v:
                k += int(f.exp)
            else:
                rest.append(f)
        buckets[k].append(mul(*rest) if rest else ONE)
    return [add(*b) for b in buckets]


__all__ = [
    "differentiate",
    "substitute",
    "substitute_many",
    "replace_subexpr",
    "is_constant_in",
    "polynomial_degree",
    "coefficients_in",
]
