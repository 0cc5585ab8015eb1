"""Fourth-order ODEs of the linearizable class, stored by coefficient.

The class is

    y'''' + (A1 y' + A0) y''' + B0 y''^2 + (C2 y'^2 + C1 y' + C0) y''
          + D4 y'^4 + D3 y'^3 + D2 y'^2 + D1 y' + D0 = 0

with every coefficient a function of (x, y).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Iterable

import numpy as np

from .expr import ZERO, Expr, as_expr, evaluate, to_string

SLOTS = ("A1", "A0", "B0", "C2", "C1", "C0", "D4", "D3", "D2", "D1", "D0")
INDEPENDENT = frozenset({"x", "y"})


@dataclass(frozen=True)
class OdeCoefficients:
    A1: Expr = ZERO
    A0: Expr = ZERO
    B0: Expr = ZERO
    C2: Expr = ZERO
    C1: Expr = ZERO
    C0: Expr = ZERO
    D4: Expr = ZERO
    D3: Expr = ZERO
    D2: Expr = ZERO
    D1: Expr = ZERO
    D0: Expr = ZERO
    parameters: frozenset = frozenset()

    def __post_init__(self):
        for name in SLOTS:
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        object.__setattr__(self, "parameters", frozenset(self.parameters))
        allowed = INDEPENDENT | self.parameters
        for name in SLOTS:
            extra = getattr(self, name).free_symbols - allowed
            if extra and self.parameters:
                raise ValueError(f"{name} uses undeclared symbols {sorted(extra)}")
        if not self.parameters:
            # infer the parameter set when none is declared
            found = set()
            for name in SLOTS:
                found |= getattr(self, name).free_symbols
            object.__setattr__(self, "parameters", frozenset(found - INDEPENDENT))

    @classmethod
    def from_dict(cls, d: dict, parameters: Iterable[str] = ()) -> "OdeCoefficients":
        unknown = set(d) - set(SLOTS)
        if unknown:
            raise KeyError(f"unknown coefficient slots {sorted(unknown)}")
        return cls(**{k: as_expr(v) for k, v in d.items()}, parameters=frozenset(parameters))

    def items(self):
        return [(name, getattr(self, name)) for name in SLOTS]

    def as_strings(self) -> dict[str, str]:
        return {name: to_string(e) for name, e in self.items()}

    def substitute(self, mapping: dict) -> "OdeCoefficients":
        from .expr import substitute_many

        new = {name: substitute_many(e, mapping) for name, e in self.items()}
        return OdeCoefficients(**new, parameters=self.parameters - set(mapping))


@dataclass(frozen=True)
class JetPoint:
    x: float
    y: float
    y1: float
    y2: float
    y3: float
    y4: float

    def __post_init__(self):
        for f in fields(self):
            if not np.all(np.isfinite(getattr(self, f.name))):
                raise ValueError(f"jet component {f.name} is not finite")


def _terms(c: OdeCoefficients, j: JetPoint, params: dict) -> list:
    env = dict(params)
    env["x"] = j.x
    env["y"] = j.y
    v = {name: evaluate(e, env) for name, e in c.items()}
    y1, y2, y3 = j.y1, j.y2, j.y3
    return [
        j.y4,
        v["A1"] * y1 * y3,
        v["A0"] * y3,
        v["B0"] * y2 * y2,
        v["C2"] * y1 * y1 * y2,
        v["C1"] * y1 * y2,
        v["C0"] * y2,
        v["D4"] * y1**4,
        v["D3"] * y1**3,
        v["D2"] * y1 * y1,
        v["D1"] * y1,
        v["D0"] + 0 * y1,
    ]


def class_residual(c: OdeCoefficients, j: JetPoint, params: dict | None = None):
    """Left-hand side of the class equation at one jet (vectorised over array jets)."""
    return sum(_terms(c, j, params or {}))


def class_residual_scaled(c: OdeCoefficients, j: JetPoint, params: dict | None = None):
    """Residual divided by (1 + largest additive term magnitude)."""
    terms = _terms(c, j, params or {})
    scale = np.max(np.abs(np.array(np.broadcast_arrays(*terms))), axis=0)
    return np.abs(sum(terms)) / (1.0 + scale)


Profile = Callable[[np.ndarray], tuple]


def residual_of_profile(c: OdeCoefficients, H: Profile, grid, params: dict | None = None) -> float:
    """Max relative class residual of the profile ``H`` (x -> (y, y1, y2, y3, y4)) over ``grid``."""
    xs = np.asarray(grid, dtype=float)
    y, y1, y2, y3, y4 = (np.broadcast_to(np.asarray(v, dtype=float), xs.shape) for v in H(xs))
    # DomainError from a singular coefficient carries the offending grid point
    r = class_residual_scaled(c, JetPoint(xs, y, y1, y2, y3, y4), params)
    return float(np.max(r))


__all__ = [
    "SLOTS",
    "OdeCoefficients",
    "JetPoint",
    "class_residual",
    "class_residual_scaled",
    "residual_of_profile",
]
