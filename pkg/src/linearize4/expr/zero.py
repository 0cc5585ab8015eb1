"""Zero testing: exact cancellation first, seeded random sampling second."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import Inconclusive
from .core import Expr
from .numeric import evaluate_with_scale
from .rational import is_zero_exact

DEFAULT_SAMPLES = 20
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SampleResult:
    """Outcome of a sampling zero test."""

    zero: bool
    max_residual: float  # max of |value| / (1 + scale) over admissible points
    n_valid: int
    n_rejected: int
    exact: bool = False


def sample_points(names, n: int, seed: int, ranges: dict | None = None) -> dict[str, np.ndarray]:
    """Draw ``n`` points with components in [-2, -0.1] U [0.1, 2] unless ``ranges`` overrides a symbol."""
    rng = np.random.default_rng(seed)
    ranges = ranges or {}
    out = {}
    for name in sorted(names):
        if name in ranges:
            lo, hi = ranges[name]
            out[name] = rng.uniform(lo, hi, n)
        else:
            mag = rng.uniform(0.1, 2.0, n)
            sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            out[name] = sign * mag
    return out


def sample_test(
    e: Expr,
    symbols=(),
    seed: int = 0,
    n: int = DEFAULT_SAMPLES,
    ranges: dict | None = None,
    tol: float = DEFAULT_TOL,
    exact_first: bool = True,
    fixed: dict | None = None,
) -> SampleResult:
    """Sampling zero test; symbols in ``fixed`` are bound to the given floats instead of sampled."""
    if exact_first and is_zero_exact(e):
        return SampleResult(True, 0.0, 0, 0, exact=True)
    fixed = dict(fixed or {})
    names = (set(e.free_symbols) | set(symbols)) - set(fixed)
    if not names:
        v, s = evaluate_with_scale(e, fixed)
        if not np.isfinite(v):
            raise Inconclusive(f"constant expression {e} is not finite")
        r = abs(v) / (1.0 + s)
        return SampleResult(abs(v) < tol * (1.0 + s), r, 1, 0)
    pts = sample_points(names, 2 * n, seed, ranges)
    pts.update(fixed)
    v, s = evaluate_with_scale(e, pts)
    v = np.broadcast_to(v, (2 * n,))
    s = np.broadcast_to(s, (2 * n,))
    ok = np.isfinite(v) & np.isfinite(s)
    idx = np.flatnonzero(ok)[:n]
    rejected = 2 * n - int(ok.sum())
    if idx.size < n:
        raise Inconclusive(f"{rejected} of {2 * n} sample points inadmissible for {e}")
    vv, ss = np.abs(v[idx]), s[idx]
    resid = vv / (1.0 + ss)
    return SampleResult(bool(np.all(vv < tol * (1.0 + ss))), float(resid.max()), int(idx.size), rejected)


def is_identically_zero(
    e: Expr,
    symbols=(),
    seed: int = 0,
    n: int = DEFAULT_SAMPLES,
    ranges: dict | None = None,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Decide ``e == 0`` identically.

    Exact common-denominator cancellation is tried first (kernels are opaque
    atoms); otherwise ``e`` is sampled at ``n`` seeded points and declared
    zero iff every value is below ``tol * (1 + largest additive term)``.
    Raises :class:`Inconclusive` when more than half the candidate points are
    inadmissible (poles, negative radicands).
    """
    return sample_test(e, symbols, seed, n, ranges, tol).zero
