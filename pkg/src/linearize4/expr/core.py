"""Immutable expression nodes and the canonicalising constructors.

Every public constructor (:func:`add`, :func:`mul`, :func:`pow_`,
:func:`kernel`) returns a normalised tree, so any ``Expr`` obtained through
them is already in canonical form.  Normal form rules:

* sums are flattened, like terms are collected and operands sorted by key;
* products are flattened, equal bases have their exponents summed, numeric
  factors are folded into a single leading coefficient, and products
  containing a sum are distributed (polynomial parts are always expanded);
* a sum raised to a non-positive-integer power is made monic (its first term
  has coefficient one) so that equal denominators are recognised;
* negative powers of ``sec`` are rewritten as ``cos`` and vice versa;
* ``sqrt(u)`` is stored as ``u^(1/2)``.
"""

from __future__ import annotations

import math
from fractions import Fraction

from ..errors import DomainError

KERNELS = ("sin", "cos", "tan", "sec", "tanh", "sqrt", "exp", "ln")
_ODD = {"sin", "tan", "tanh"}
_EVEN = {"cos", "sec"}

# kind ranks fix the total order between node types
_RATIONAL, _SYMBOL, _POW, _KERNEL, _MUL, _ADD = range(6)


class Expr:
    __slots__ = ("_key", "_hash", "_free")

    def __eq__(self, other):
        return isinstance(other, Expr) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self._key < other._key

    @property
    def free_symbols(self) -> frozenset[str]:
        return self._free

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"{type(self).__name__}<{to_string(self)}>"

    # arithmetic sugar, used heavily when transcribing formulas
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, pow_(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), pow_(self, -1))

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __pow__(self, exponent):
        if isinstance(exponent, Rational):
            exponent = exponent.value
        return pow_(self, exponent)


class Rational(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)
        self._key = (_RATIONAL, self.value)
        self._hash = hash(self._key)
        self._free = frozenset()


class Symbol(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = (_SYMBOL, name)
        self._hash = hash(self._key)
        self._free = frozenset((name,))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Fraction):
        self.base = base
        self.exp = Fraction(exp)
        self._key = (_POW, base._key, self.exp)
        self._hash = hash(self._key)
        self._free = base._free


class Kernel(Expr):
    __slots__ = ("tag", "arg")

    def __init__(self, tag: str, arg: Expr):
        self.tag = tag
        self.arg = arg
        self._key = (_KERNEL, tag, arg._key)
        self._hash = hash(self._key)
        self._free = arg._free


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = factors
        self._key = (_MUL, tuple(f._key for f in factors))
        self._hash = hash(self._key)
        self._free = frozenset().union(*(f._free for f in factors))

    @property
    def coeff(self) -> Fraction:
        first = self.factors[0]
        return first.value if isinstance(first, Rational) else Fraction(1)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self._key = (_ADD, tuple(t._key for t in terms))
        self._hash = hash(self._key)
        self._free = frozenset().union(*(t._free for t in terms))


ZERO = Rational(0)
ONE = Rational(1)
MINUS_ONE = Rational(-1)
HALF = Fraction(1, 2)


def num(value) -> Rational:
    return Rational(value)


def sym(name: str) -> Symbol:
    return Symbol(name)


def symbols(names: str) -> tuple[Symbol, ...]:
    return tuple(Symbol(n) for n in names.replace(",", " ").split())


def as_expr(value) -> Expr:
    """Coerce ints, Fractions, floats (by their shortest decimal repr) and strings."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction)):
        return Rational(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value}")
        return Rational(Fraction(repr(value)))
    if isinstance(value, str):
        from .parse import parse

        return parse(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


# ---------------------------------------------------------------- helpers


def split_coeff(e: Expr) -> tuple[Fraction, Expr | None]:
    """Split ``e`` into numeric coefficient and the remaining monomial (None if constant)."""
    if isinstance(e, Rational):
        return e.value, None
    if isinstance(e, Mul) and isinstance(e.factors[0], Rational):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def _scaled(rest: Expr, c: Fraction) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Rational(c),) + rest.factors)
    return Mul((Rational(c), rest))


def _build_mul(coeff: Fraction, factors: list[Expr]) -> Expr:
    if coeff == 0:
        return ZERO
    if not factors:
        return Rational(coeff)
    factors = sorted(factors, key=lambda f: f._key)
    if coeff == 1 and len(factors) == 1:
        return factors[0]
    if coeff == 1:
        return Mul(tuple(factors))
    return Mul((Rational(coeff),) + tuple(factors))


def _exact_sqrt(q: Fraction) -> Fraction | None:
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def add_content(p: Add, positive_only: bool = False) -> tuple[Fraction, Expr]:
    """Return ``(c, P)`` with ``p == c*P`` and the leading non-constant term of ``P`` having coefficient 1."""
    # lead is chosen by monomial alone so that rescaling cannot change it
    monos = [split_coeff(t) for t in p.terms if not isinstance(t, Rational)]
    c = min(monos, key=lambda m: m[1]._key)[0] if monos else split_coeff(p.terms[0])[0]
    if positive_only:
        c = abs(c)
    if c == 1:
        return c, p
    inv = Rational(1 / c)
    return c, add(*(mul(inv, t) for t in p.terms))


# ---------------------------------------------------------------- constructors


def add(*args: Expr) -> Expr:
    const = Fraction(0)
    collected: dict[tuple, list] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.terms)
            continue
        c, rest = split_coeff(a)
        if rest is None:
            const += c
            continue
        slot = collected.get(rest._key)
        if slot is None:
            collected[rest._key] = [rest, c]
        else:
            slot[1] += c
    terms = [_scaled(rest, c) for rest, c in collected.values() if c != 0]
    if const != 0:
        terms.append(Rational(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=lambda t: t._key)
    return Add(tuple(terms))


def _trig_base(b: Expr, e: Fraction) -> tuple[Expr, Fraction]:
    # cos(u)^e is tracked as sec(u)^(-e) so that the two combine
    if isinstance(b, Kernel) and b.tag == "cos":
        return Kernel("sec", b.arg), -e
    return b, e


def mul(*args: Expr) -> Expr:
    coeff = Fraction(1)
    bases: dict[tuple, list] = {}
    stack = list(args)

    def push(b: Expr, e: Fraction):
        slot = bases.get(b._key)
        if slot is None:
            bases[b._key] = [b, e]
        else:
            slot[1] += e

    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(f.factors)
            continue
        if isinstance(f, Rational):
            coeff *= f.value
            if coeff == 0:
                return ZERO
            continue
        if isinstance(f, Pow):
            b, e = f.base, f.exp
        else:
            b, e = f, Fraction(1)
        if isinstance(b, Add):
            c, b = add_content(b, positive_only=e.denominator != 1)
            if c != 1:
                cp = pow_(Rational(c), e)
                if isinstance(cp, Rational):
                    coeff *= cp.value
                else:
                    stack.append(cp)
        b, e = _trig_base(b, e)
        push(b, e)

    factors: list[Expr] = []
    sums: list[Add] = []
    again = False
    for b, e in bases.values():
        if e == 0:
            continue
        # a compound base raised to an integer unfolds into factors that may merge
        again = again or (isinstance(b, (Mul, Pow)) and e.denominator == 1)
        if isinstance(b, Kernel) and b.tag == "sec" and e < 0:
            b, e = Kernel("cos", b.arg), -e
        p = pow_(b, e)
        if isinstance(p, Rational):
            coeff *= p.value
        elif isinstance(p, Add):
            sums.append(p)
        elif isinstance(p, Mul):
            c, rest = split_coeff(p)
            coeff *= c
            factors.extend(rest.factors if isinstance(rest, Mul) else (rest,))
        else:
            factors.append(p)
    if coeff == 0:
        return ZERO
    if again:
        return mul(Rational(coeff), *factors, *sums)
    if not sums:
        return _build_mul(coeff, factors)
    terms = [_build_mul(coeff, factors)]
    for s in sums:
        terms = [mul(t, u) for t in terms for u in s.terms]
    return add(*terms)


def pow_(b: Expr, e) -> Expr:
    e = Fraction(e)
    if e.denominator not in (1, 2):
        raise ValueError(f"exponent {e} is not an integer or half-integer")
    if e == 0:
        return ONE
    if e == 1:
        return b
    integer = e.denominator == 1
    if isinstance(b, Rational):
        v = b.value
        if v == 0:
            if e < 0:
                raise DomainError("division by zero", subexpr=b)
            return ZERO
        if integer:
            return Rational(v ** int(e))
        if v < 0:
            raise DomainError("square root of a negative constant", subexpr=b)
        r = _exact_sqrt(v)
        if r is not None:
            return Rational(r ** int(2 * e))
        whole = math.floor(e)
        if whole == 0:
            return Pow(b, e)
        return _build_mul(v**whole, [Pow(b, HALF)])
    if isinstance(b, Pow):
        if integer:
            return pow_(b.base, b.exp * e)
        return Pow(b, e)
    if isinstance(b, Mul):
        if integer:
            return mul(*(pow_(f, e) for f in b.factors))
        return Pow(b, e)
    if isinstance(b, Add):
        if integer and e > 0:
            out = b
            for _ in range(int(e) - 1):
                left = out.terms if isinstance(out, Add) else (out,)
                out = add(*(mul(t, u) for t in left for u in b.terms))
            return out
        c, p = add_content(b, positive_only=not integer)
        if c == 1:
            return Pow(b, e)
        return mul(pow_(Rational(c), e), Pow(p, e))
    if isinstance(b, Kernel) and e < 0:
        if b.tag == "cos":
            return pow_(Kernel("sec", b.arg), -e)
        if b.tag == "sec":
            return pow_(Kernel("cos", b.arg), -e)
    return Pow(b, e)


def kernel(tag: str, arg: Expr) -> Expr:
    if tag not in KERNELS:
        raise ValueError(f"unknown kernel {tag!r}")
    if tag == "sqrt":
        return pow_(arg, HALF)
    if isinstance(arg, Rational) and arg.value == 0:
        if tag in ("sin", "tan", "tanh"):
            return ZERO
        if tag in ("cos", "sec", "exp"):
            return ONE
    if tag == "ln" and arg == ONE:
        return ZERO
    if tag in _ODD or tag in _EVEN:
        c, _ = split_coeff(arg)
        if c < 0:
            flipped = mul(MINUS_ONE, arg)
            if tag in _ODD:
                return mul(MINUS_ONE, Kernel(tag, flipped))
            return Kernel(tag, flipped)
    return Kernel(tag, arg)


def sin(u) -> Expr:
    return kernel("sin", as_expr(u))


def cos(u) -> Expr:
    return kernel("cos", as_expr(u))


def tan(u) -> Expr:
    return kernel("tan", as_expr(u))


def sec(u) -> Expr:
    return kernel("sec", as_expr(u))


def tanh(u) -> Expr:
    return kernel("tanh", as_expr(u))


def sqrt(u) -> Expr:
    return kernel("sqrt", as_expr(u))


def exp(u) -> Expr:
    return kernel("exp", as_expr(u))


def ln(u) -> Expr:
    return kernel("ln", as_expr(u))


def rebuild(e: Expr) -> Expr:
    """Re-run every constructor bottom-up (normalisation of a raw tree)."""
    if isinstance(e, (Rational, Symbol)):
        return e
    if isinstance(e, Add):
        return add(*(rebuild(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(rebuild(f) for f in e.factors))
    if isinstance(e, Pow):
        return pow_(rebuild(e.base), e.exp)
    return kernel(e.tag, rebuild(e.arg))


normalize = rebuild


# ---------------------------------------------------------------- printing

_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


def _wrap(text: str, prec: int, need: int) -> str:
    return f"({text})" if prec < need else text


def _is_negative(e: Expr) -> bool:
    c, _ = split_coeff(e)
    return c < 0


def _fmt_exp(e: Fraction) -> str:
    if e.denominator == 1 and e > 0:
        return str(e.numerator)
    return f"({e.numerator}/{e.denominator})" if e.denominator != 1 else f"({e.numerator})"


def _str(e: Expr) -> tuple[str, int]:
    if isinstance(e, Rational):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator), (_P_ATOM if v >= 0 else _P_NEG)
        return f"{v.numerator}/{v.denominator}", _P_MUL
    if isinstance(e, Symbol):
        return e.name, _P_ATOM
    if isinstance(e, Kernel):
        return f"{e.tag}({_str(e.arg)[0]})", _P_ATOM
    if isinstance(e, Pow):
        if e.exp < 0 and not (isinstance(e.base, Add) and e.exp.denominator == 1 and e.exp != -1):
            return _str(Mul((ONE, e)))
        if e.exp == HALF:
            return f"sqrt({_str(e.base)[0]})", _P_ATOM
        text, prec = _str(e.base)
        return f"{_wrap(text, prec, _P_ATOM)}^{_fmt_exp(e.exp)}", _P_POW
    if isinstance(e, Mul):
        c = e.coeff
        num_items: list[str] = []
        den_items: list[str] = []
        sum_den = False
        for f in e.factors:
            if isinstance(f, Rational):
                continue
            if isinstance(f, Pow) and f.exp < 0 and not (isinstance(f.base, Add) and f.exp.denominator == 1 and f.exp != -1):
                text, prec = _str(f.base if f.exp == -1 else Pow(f.base, -f.exp))
                den_items.append(_wrap(text, prec, _P_NEG))
                sum_den = sum_den or isinstance(f.base, Add)
            else:
                text, prec = _str(f)
                num_items.append(_wrap(text, prec, _P_NEG))
        p, q = abs(c.numerator), c.denominator
        if p != 1 or not num_items:
            num_items.insert(0, str(p))
        if q != 1:
            den_items.insert(0, str(q))
        text = "*".join(num_items)
        if len(den_items) == 1:
            text = f"{text}/{den_items[0]}"
        elif den_items and sum_den and len(den_items) - (q != 1) > 1:
            # a product of a sum with another factor would re-expand on parse
            text = text + "".join(f"/{d}" for d in den_items)
        elif den_items:
            text = f"{text}/(" + "*".join(den_items) + ")"
        if c < 0:
            text = "-" + text
        return text, _P_MUL
    parts: list[str] = []
    for i, t in enumerate(e.terms):
        if i and _is_negative(t):
            parts.append(" - " + _str(mul(MINUS_ONE, t))[0])
        else:
            parts.append((" + " if i else "") + _str(t)[0])
    return "".join(parts), _P_ADD


def to_string(e: Expr) -> str:
    """Print ``e`` in the infix grammar accepted by :func:`parse`."""
    return _str(e)[0]
