"""Recursive-descent parser for the infix expression grammar.

Grammar (``^`` binds tighter than unary minus, which binds tighter than
``*`` and ``/``; ``^`` is right-associative)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | NAME '(' args ')' | '(' sum ')'

Numbers are read exactly: ``0.25`` becomes the rational 1/4.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ArityError, ExprSyntaxError
from .core import KERNELS, MINUS_ONE, Expr, Rational, Symbol, add, kernel, mul, pow_

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    # byte offsets, since the input contract is UTF-8
    offsets = [0]
    for ch in text:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            tokens.append(_Token("num", m.group(0), offsets[i]))
            i = m.end()
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], offsets[i]))
            i = j
            continue
        if ch in "+-*/^(),":
            tokens.append(_Token(ch, ch, offsets[i]))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", offsets[i])
    tokens.append(_Token("end", "", offsets[n]))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Token:
        t = self.tok
        if t.kind != kind:
            what = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {kind!r}, found {what}", t.pos)
        return self.advance()

    def sum(self) -> Expr:
        left = self.product()
        while self.tok.kind in "+-":
            op = self.advance().kind
            right = self.product()
            left = add(left, right if op == "+" else mul(MINUS_ONE, right))
        return left

    def product(self) -> Expr:
        left = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.advance()
            right = self.unary()
            if op.kind == "*":
                left = mul(left, right)
            else:
                if right == Rational(0):
                    raise ExprSyntaxError("division by literal zero", op.pos)
                left = mul(left, pow_(right, -1))
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "-":
            self.advance()
            return mul(MINUS_ONE, self.unary())
        if self.tok.kind == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind != "^":
            return base
        caret = self.advance()
        exponent = self.unary()
        if not isinstance(exponent, Rational) or exponent.value.denominator not in (1, 2):
            raise ExprSyntaxError("exponent must be an integer or half-integer constant", caret.pos)
        try:
            return pow_(base, exponent.value)
        except ArithmeticError as exc:
            raise ExprSyntaxError(str(exc), caret.pos) from None

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Rational(Fraction(t.text))
        if t.kind == "name":
            self.advance()
            if self.tok.kind != "(":
                return Symbol(t.text)
            if t.text not in KERNELS:
                raise ExprSyntaxError(f"unknown function {t.text!r}", t.pos)
            self.advance()
            args = []
            if self.tok.kind != ")":
                args.append(self.sum())
                while self.tok.kind == ",":
                    self.advance()
                    args.append(self.sum())
            self.expect(")")
            if len(args) != 1:
                raise ArityError(f"{t.text} takes exactly one argument, got {len(args)}", t.pos)
            try:
                return kernel(t.text, args[0])
            except ArithmeticError as exc:
                raise ExprSyntaxError(str(exc), t.pos) from None
        if t.kind == "(":
            self.advance()
            inner = self.sum()
            self.expect(")")
            return inner
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"unexpected {what}", t.pos)


def parse(text: str) -> Expr:
    """Parse ``text`` into a normalised :class:`Expr`."""
    p = _Parser(text)
    e = p.sum()
    if p.tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {p.tok.text!r}", p.tok.pos)
    return e
