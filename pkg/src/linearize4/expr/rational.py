"""Rational normal form over opaque atoms, with exact polynomial division.

Atoms are symbols, kernels and fractional powers; everything else is
arithmetic.  ``together`` brings an expression over a common denominator
kept in factored form, and ``cancel`` removes every denominator factor that
divides the numerator exactly.  No multivariate gcd is attempted: the
denominators met in this package are products of the factors written down
by the caller, so trial division by those factors is enough.
"""

from __future__ import annotations

from fractions import Fraction

from .core import (
    ZERO,
    Add,
    Expr,
    Kernel,
    Mul,
    Pow,
    Rational,
    Symbol,
    add,
    add_content,
    mul,
    pow_,
    split_coeff,
)

Factors = dict  # key -> [base Expr, multiplicity]


def _merge_max(parts: list[Factors]) -> Factors:
    out: Factors = {}
    for p in parts:
        for k, (b, m) in p.items():
            if k not in out or out[k][1] < m:
                out[k] = [b, m]
    return out


def _as_denominator(n: Expr, power: int) -> tuple[Fraction, Factors]:
    """Split polynomial ``n`` into numeric content and factor multiplicities (each times ``power``)."""
    c = Fraction(1)
    out: Factors = {}

    def push(b: Expr, m: int):
        slot = out.get(b._key)
        if slot is None:
            out[b._key] = [b, m]
        else:
            slot[1] += m

    if isinstance(n, Rational):
        return n.value**power, out
    if isinstance(n, Add):
        cc, p = add_content(n)
        push(p, power)
        return cc**power, out
    factors = n.factors if isinstance(n, Mul) else (n,)
    for f in factors:
        if isinstance(f, Rational):
            c *= f.value**power
        elif isinstance(f, Pow) and f.exp.denominator == 1:
            push(f.base, int(f.exp) * power)
        else:
            push(f, power)
    return c, out


def together(e: Expr) -> tuple[Expr, Factors]:
    """Return ``(N, D)`` with ``e == N / prod(b^m for b, m in D)``; ``N`` is expanded."""
    if isinstance(e, (Rational, Symbol, Kernel)):
        return e, {}
    if isinstance(e, Pow):
        if e.exp.denominator != 1:
            return e, {}
        k = int(e.exp)
        nb, db = together(e.base)
        if k > 0:
            return pow_(nb, k), {key: [b, m * k] for key, (b, m) in db.items()}
        c, den = _as_denominator(nb, -k)
        num = mul(Rational(1 / c), *(pow_(b, m * -k) for b, m in db.values()))
        return num, den
    if isinstance(e, Mul):
        num_parts = []
        den: Factors = {}
        for f in e.factors:
            nf, df = together(f)
            num_parts.append(nf)
            for key, (b, m) in df.items():
                if key in den:
                    den[key][1] += m
                else:
                    den[key] = [b, m]
        return mul(*num_parts), den
    # sum: common denominator by maximal multiplicities
    parts = [together(t) for t in e.terms]
    common = _merge_max([d for _, d in parts])
    terms = []
    for n, d in parts:
        missing = [pow_(b, m - d.get(k, (None, 0))[1]) for k, (b, m) in common.items() if m > d.get(k, (None, 0))[1]]
        terms.append(mul(n, *missing))
    return add(*terms), common


def numerator(e: Expr) -> Expr:
    return together(e)[0]


# ---------------------------------------------------------------- polynomials


class Poly:
    """Sparse multivariate polynomial over Fraction; variables are atom Exprs."""

    __slots__ = ("atoms", "terms")

    def __init__(self, atoms: tuple[Expr, ...], terms: dict[tuple[int, ...], Fraction]):
        self.atoms = atoms
        self.terms = {m: c for m, c in terms.items() if c != 0}

    def is_zero(self) -> bool:
        return not self.terms

    def leading(self):
        m = max(self.terms)
        return m, self.terms[m]

    def to_expr(self) -> Expr:
        out = []
        for m, c in self.terms.items():
            out.append(mul(Rational(c), *(pow_(a, k) for a, k in zip(self.atoms, m) if k)))
        return add(*out)


def _monomial_atoms(t: Expr) -> list[tuple[Expr, int]]:
    factors = t.factors if isinstance(t, Mul) else (t,)
    out = []
    for f in factors:
        if isinstance(f, Rational):
            continue
        if isinstance(f, Pow) and f.exp.denominator == 1:
            if f.exp < 0:
                raise ValueError(f"not a polynomial: negative power {f}")
            out.append((f.base, int(f.exp)))
        else:
            out.append((f, 1))
    return out


def atoms_of(*exprs: Expr) -> tuple[Expr, ...]:
    found: dict = {}
    for e in exprs:
        terms = e.terms if isinstance(e, Add) else (e,)
        for t in terms:
            for a, _ in _monomial_atoms(t):
                found[a._key] = a
    return tuple(found[k] for k in sorted(found))


def to_poly(e: Expr, atoms: tuple[Expr, ...]) -> Poly:
    index = {a._key: i for i, a in enumerate(atoms)}
    terms: dict[tuple[int, ...], Fraction] = {}
    for t in e.terms if isinstance(e, Add) else (e,):
        c, _ = split_coeff(t)
        expo = [0] * len(atoms)
        for a, k in _monomial_atoms(t):
            expo[index[a._key]] += k
        m = tuple(expo)
        terms[m] = terms.get(m, Fraction(0)) + c
    return Poly(atoms, terms)


def poly_divide(n: Poly, f: Poly) -> Poly | None:
    """Exact quotient ``n / f`` (lex order), or None if ``f`` does not divide ``n``."""
    if f.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    lm_f, lc_f = f.leading()
    rem = dict(n.terms)
    quot: dict[tuple[int, ...], Fraction] = {}
    while rem:
        m = max(rem)
        c = rem[m]
        shift = tuple(a - b for a, b in zip(m, lm_f))
        if any(s < 0 for s in shift):
            return None
        q = c / lc_f
        quot[shift] = quot.get(shift, Fraction(0)) + q
        for fm, fc in f.terms.items():
            key = tuple(a + b for a, b in zip(fm, shift))
            v = rem.get(key, Fraction(0)) - q * fc
            if v == 0:
                rem.pop(key, None)
            else:
                rem[key] = v
    return Poly(n.atoms, quot)


def divide_exact(n: Expr, f: Expr) -> Expr | None:
    """``n / f`` if ``f`` divides the polynomial ``n`` exactly, else None."""
    atoms = atoms_of(n, f)
    q = poly_divide(to_poly(n, atoms), to_poly(f, atoms))
    return None if q is None else q.to_expr()


def cancel(e: Expr) -> Expr:
    """Common-denominator form with every exactly dividing denominator factor removed."""
    n, den = together(e)
    if n == ZERO:
        return ZERO
    leftover = []
    for key in sorted(den):
        b, m = den[key]
        while m > 0:
            try:
                q = divide_exact(n, b)
            except ValueError:
                q = None
            if q is None:
                break
            n, m = q, m - 1
        if m:
            leftover.append(pow_(b, -m))
    return mul(n, *leftover) if leftover else n


def is_zero_exact(e: Expr) -> bool:
    """True when the common-denominator numerator normalises to the literal 0."""
    if e == ZERO:
        return True
    return together(e)[0] == ZERO


__all__ = ["together", "numerator", "cancel", "divide_exact", "is_zero_exact", "Poly", "to_poly", "atoms_of"]
