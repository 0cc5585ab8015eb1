"""Independent oracles shared by the test modules.

Nothing here calls the package's symbolic machinery: membership in the four
linearizable families is written out by hand as float predicates, and the
parameter tuples are generated from a seeded RNG.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

NAMES = ("alpha", "beta", "gamma", "mu", "nu", "kappa", "D")


def in_family(t: dict, tol: float = 1e-9) -> str | None:
    """Name of the family containing ``t`` (absolute tolerance), else None."""
    a, b, g, m, n, k, d = (float(t[x]) for x in NAMES)
    z = lambda v: abs(v) <= tol  # noqa: E731
    if z(n):
        return "Case1" if z(a) and z(b) and z(g) else None
    if z(g):
        if z(b) and z(a) and z(k - d * d):
            return "Case21a"
        if z(b - 3 * n) and z(a - 4 * n) and z(k - d * d):
            return "Case21b"
        return None
    if z(a - 4 * n) and z(b - 3 * n) and z(k - (2 * g * m + n) * d * d / n):
        return "Case22"
    return None


def _rat(rng, lo=-3, hi=3, den=8, nonzero=False) -> Fraction:
    while True:
        q = Fraction(int(rng.integers(lo * den, hi * den + 1)), int(rng.integers(1, den + 1)))
        if not nonzero or q != 0:
            return q


def family_member(rng, family: str) -> dict:
    """Exact member of a family; mu and D always nonzero."""
    m, d = _rat(rng, nonzero=True), _rat(rng, nonzero=True)
    if family == "Case1":
        return dict(alpha=0, beta=0, gamma=0, mu=m, nu=0, kappa=_rat(rng), D=d)
    n = _rat(rng, nonzero=True)
    if family == "Case21a":
        return dict(alpha=0, beta=0, gamma=0, mu=m, nu=n, kappa=d * d, D=d)
    if family == "Case21b":
        return dict(alpha=4 * n, beta=3 * n, gamma=0, mu=m, nu=n, kappa=d * d, D=d)
    g = _rat(rng, nonzero=True)
    return dict(alpha=4 * n, beta=3 * n, gamma=g, mu=m, nu=n, kappa=(2 * g * m + n) * d * d / n, D=d)


# the parameters each family pins down (perturbing any of them leaves the family)
CONSTRAINED = {
    "Case1": ("alpha", "beta", "gamma", "nu"),
    "Case21a": ("alpha", "beta", "gamma", "kappa"),
    "Case21b": ("alpha", "beta", "gamma", "kappa"),
    "Case22": ("alpha", "beta", "kappa"),
}
FAMILIES = tuple(CONSTRAINED)


def perturb(t: dict, name: str, eps=Fraction(1, 1000)) -> dict:
    out = dict(t)
    out[name] = Fraction(out[name]) + eps
    return out


def parameter_tuples(n: int = 1000, seed: int = 20240601) -> list[dict]:
    """Mix of exact family members, single-constraint perturbations, float-rounded members and generic tuples."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        kind = i % 5
        fam = FAMILIES[int(rng.integers(len(FAMILIES)))]
        if kind in (0, 1):
            out.append(family_member(rng, fam))
        elif kind == 2:
            t = family_member(rng, fam)
            name = CONSTRAINED[fam][int(rng.integers(len(CONSTRAINED[fam])))]
            sign = 1 if rng.random() < 0.5 else -1
            out.append(perturb(t, name, sign * Fraction(1, 1000)))
        elif kind == 3:
            # members rounded to binary64: satisfy the constraints only to ~1e-16
            out.append({k: float(v) for k, v in family_member(rng, fam).items()})
        else:
            t = {k: _rat(rng) for k in NAMES}
            t["mu"], t["D"] = _rat(rng, nonzero=True), _rat(rng, nonzero=True)
            out.append(t)
    return out
