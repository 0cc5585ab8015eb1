"""Binary64 evaluation of expression trees.

Evaluation is vectorised: bindings may be floats or equally-shaped numpy
arrays.  Alongside each value a *scale* is propagated (the magnitude of the
largest additive term met on the way up), which the zero test uses as its
relative yardstick.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, UnboundSymbolError
from .core import Add, Expr, Kernel, Mul, Pow, Rational, Symbol

POLE_GUARD = 1e-12


def _point(env: dict, mask) -> dict:
    if mask is None:
        return {k: float(v) for k, v in env.items()}
    idx = int(np.flatnonzero(np.broadcast_to(mask, np.shape(mask)).ravel())[0])
    return {k: float(np.ravel(v)[idx]) if np.ndim(v) else float(v) for k, v in env.items()}


class _Evaluator:
    def __init__(self, env: dict, strict: bool):
        self.env = env
        self.strict = strict
        self.memo: dict = {}

    def fail(self, what: str, e: Expr, bad):
        if self.strict:
            raise DomainError(what, subexpr=e, point=_point(self.env, bad if np.ndim(bad) else None))

    def run(self, e: Expr):
        hit = self.memo.get(e)
        if hit is not None:
            return hit
        out = self._eval(e)
        self.memo[e] = out
        return out

    def _eval(self, e: Expr):
        if isinstance(e, Rational):
            v = float(e.value)
            return v, abs(v)
        if isinstance(e, Symbol):
            try:
                v = self.env[e.name]
            except KeyError:
                raise UnboundSymbolError(e.name) from None
            return v, np.abs(v)
        if isinstance(e, Add):
            v, s = self.run(e.terms[0])
            for t in e.terms[1:]:
                tv, ts = self.run(t)
                v = v + tv
                s = np.maximum(s, ts)
            return v, s
        if isinstance(e, Mul):
            v, s = self.run(e.factors[0])
            for f in e.factors[1:]:
                fv, fs = self.run(f)
                v = v * fv
                s = s * fs
            return v, s
        if isinstance(e, Pow):
            bv, bs = self.run(e.base)
            p = float(e.exp)
            bad = np.zeros(np.shape(bv), dtype=bool)
            if p < 0:
                pole = np.abs(bv) < POLE_GUARD
                if np.any(pole):
                    self.fail("pole (zero denominator)", e, pole)
                bad = bad | pole
            if e.exp.denominator == 2:
                neg = bv < 0
                if np.any(neg):
                    self.fail("negative radicand", e, neg)
                bad = bad | neg
            safe = np.where(bad, 1.0, bv)
            v = np.power(safe, p)
            v = np.where(bad, np.nan, v)
            s = np.power(np.abs(bs), p) if p > 0 else np.abs(v)
            return _scalar(v), _scalar(s)
        if isinstance(e, Kernel):
            return self._kernel(e)
        raise TypeError(f"not an expression: {e!r}")

    def _kernel(self, e: Kernel):
        a, _ = self.run(e.arg)
        tag = e.tag
        if tag in ("tan", "sec"):
            c = np.cos(a)
            pole = np.abs(c) < POLE_GUARD
            if np.any(pole):
                self.fail(f"{tag} pole", e, pole)
            c = np.where(pole, np.nan, c)
            v = np.sin(a) / c if tag == "tan" else 1.0 / c
        elif tag == "sin":
            v = np.sin(a)
        elif tag == "cos":
            v = np.cos(a)
        elif tag == "tanh":
            v = np.tanh(a)
        elif tag == "exp":
            v = np.exp(a)
        elif tag == "ln":
            bad = a <= 0
            if np.any(bad):
                self.fail("logarithm of a non-positive number", e, bad)
            v = np.log(np.where(bad, 1.0, a))
            v = np.where(bad, np.nan, v)
        else:
            raise ValueError(f"unknown kernel {tag}")
        v = _scalar(v)
        return v, np.abs(v)


def _scalar(v):
    if isinstance(v, np.ndarray) and v.ndim == 0:
        return float(v)
    return v


def _prepare(bindings: dict) -> dict:
    env = {}
    for k, v in bindings.items():
        env[k] = np.asarray(v, dtype=float) if np.ndim(v) else float(v)
    return env


def evaluate(e: Expr, bindings: dict):
    """Evaluate ``e``; raises :class:`DomainError` on poles, negative radicands and bad logs."""
    with np.errstate(all="ignore"):
        v, _ = _Evaluator(_prepare(bindings), strict=True).run(e)
    return _scalar(v)


def evaluate_with_scale(e: Expr, bindings: dict):
    """Masked evaluation: inadmissible points come back as NaN instead of raising.

    Returns ``(value, scale)`` where scale is the largest additive-term magnitude.
    """
    with np.errstate(all="ignore"):
        v, s = _Evaluator(_prepare(bindings), strict=False).run(e)
    return _scalar(v), _scalar(s)


def evaluate_masked(e: Expr, bindings: dict):
    return evaluate_with_scale(e, bindings)[0]
