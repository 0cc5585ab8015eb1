"""Numerical certification: PDE residuals, RK4 integration of the linear
target, pullback of target solutions through the point transformation, and a
brute-force oracle for the linearization conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BranchUndefined, DiscriminantNegative, DomainError, InterpolationGap, StepCollapse
from .expr import (
    Expr,
    Kernel,
    differentiate,
    evaluate,
    polynomial_degree,
    sample_points,
    substitute,
)
from .odemodel import SLOTS, OdeCoefficients
from .reduction import PdeParams, SolutionDescriptor

# ---------------------------------------------------------------- grids and profiles


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    nx: int = 100
    t_min: float = 0.0
    t_max: float = 1.0
    nt: int = 20
    margin: float = 0.1

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("grid needs x_min < x_max")
        if self.t_min > self.t_max:
            raise ValueError("grid needs t_min <= t_max")
        if self.nx < 16 or self.nt < 1:
            raise ValueError("grid needs nx >= 16 and nt >= 1")
        if self.margin <= 0:
            raise ValueError("margin must be positive")

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def ts(self) -> np.ndarray:
        if self.nt == 1:
            return np.array([self.t_min])
        return np.linspace(self.t_min, self.t_max, self.nt)

    def mesh(self):
        return np.meshgrid(self.xs(), self.ts(), indexing="ij")


@dataclass
class NumericProfile:
    """Samples of a function and its derivatives: ``columns[k]`` is the k-th derivative."""

    abscissae: np.ndarray
    columns: list

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        if np.any(np.diff(self.abscissae) <= 0):
            raise ValueError("abscissae must be strictly increasing")
        self.columns = [np.asarray(c, dtype=float) for c in self.columns]
        if any(c.shape != self.abscissae.shape for c in self.columns):
            raise ValueError("derivative columns must match the abscissae")

    def __call__(self, xs):
        """Jet columns at ``xs`` (which must be the stored abscissae)."""
        xs = np.asarray(xs, dtype=float)
        if xs.shape != self.abscissae.shape or not np.allclose(xs, self.abscissae, rtol=0, atol=1e-14):
            raise ValueError("profile can only be evaluated at its own abscissae")
        return tuple(self.columns)

    def hermite(self, t) -> np.ndarray:
        """Cubic Hermite interpolation of column 0 using column 1 as the slope."""
        t = np.asarray(t, dtype=float)
        a = self.abscissae
        if np.any(t < a[0] - 1e-12) or np.any(t > a[-1] + 1e-12):
            raise InterpolationGap(f"requested abscissae leave the profile range [{a[0]}, {a[-1]}]")
        i = np.clip(np.searchsorted(a, t) - 1, 0, len(a) - 2)
        h = a[i + 1] - a[i]
        s = (t - a[i]) / h
        f0, f1 = self.columns[0][i], self.columns[0][i + 1]
        d0, d1 = self.columns[1][i] * h, self.columns[1][i + 1] * h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1


# ---------------------------------------------------------------- PDE residual

PDE_TERMS = ("kappa*u_xx", "2gamma*u_x^2", "2gamma*u*u_xx", "nu*u*u_xxxx", "mu*u_xxtt", "alpha*u_x*u_xxx", "beta*u_xx^2")


def _pde_terms(v: dict, u, ux, uxx, uxxx, uxxxx, uxxtt):
    return [
        v["kappa"] * uxx,
        2 * v["gamma"] * ux * ux,
        2 * v["gamma"] * u * uxx,
        v["nu"] * u * uxxxx,
        v["mu"] * uxxtt,
        v["alpha"] * ux * uxxx,
        v["beta"] * uxx * uxx,
    ]


def _relative(lhs, terms) -> np.ndarray:
    scale = np.max(np.abs(np.array([lhs] + list(terms))), axis=0)
    return np.abs(lhs - sum(terms)) / (1.0 + scale)


def implicit_jet(P: Expr, c: float, u, s_binding: dict):
    """Phase derivatives u', u'', u''', u'''' of u^2/2 + c u = P(s) by implicit differentiation."""
    P1, P2, P3, P4 = (np.broadcast_to(evaluate(differentiate(P, "s", k), s_binding), np.shape(u)) for k in range(1, 5))
    w = u + c
    u1 = P1 / w
    u2 = (P2 - u1 * u1) / w
    u3 = (P3 - 3 * u1 * u2) / w
    u4 = (P4 - 4 * u1 * u3 - 3 * u2 * u2) / w
    return u1, u2, u3, u4


def pde_residual(sd: SolutionDescriptor, p: PdeParams, g: GridSpec) -> float:
    """Max over the grid of |u_tt - RHS| / (1 + largest term) for the solution ``sd``."""
    from .reduction import implicit_root

    v = p.values()
    X, T = g.mesh()
    if sd.kind == "linear-target-only":
        raise ValueError("linear-target-only descriptors are certified through pullback")
    if sd.kind == "implicit-quadratic":
        sv = sd.params.values()
        c = float(evaluate(sd.c, sv))
        S = X - sv["D"] * T
        b = dict(sv, s=S)
        u = implicit_root(c, sv["nu"], evaluate(sd.formula, b))
        lead = v["nu"] * u + v["mu"] * v["D"] ** 2
        keep = np.abs(lead) >= g.margin
        if not np.any(keep):
            raise DomainError("every grid point lies within the margin of nu*u + mu*D^2 = 0")
        u1, u2, u3, u4 = implicit_jet(sd.formula, c, u, b)
        d = v["D"]
        ux, uxx, uxxx, uxxxx = u1, u2, u3, u4
        utt, uxxtt = d * d * u2, d * d * u4
        r = _relative(utt, _pde_terms(v, u, ux, uxx, uxxx, uxxxx, uxxtt))
        return float(np.max(r[keep]))
    ue = sd.u_expr()
    b = dict(v, x=X, t=T)

    def ev(e):
        return np.broadcast_to(evaluate(e, b), X.shape)

    dx = lambda e, n=1: differentiate(e, "x", n)  # noqa: E731
    dt = lambda e, n=1: differentiate(e, "t", n)  # noqa: E731
    u = ev(ue)
    utt = ev(dt(ue, 2))
    uxx = dx(ue, 2)
    r = _relative(utt, _pde_terms(v, u, ev(dx(ue)), ev(uxx), ev(dx(ue, 3)), ev(dx(ue, 4)), ev(dt(uxx, 2))))
    return float(np.max(r))


# ---------------------------------------------------------------- linear target integration


def _coefficient_functions(target, phi: Expr | None, bindings: dict):
    """Vectorised callables t -> (at(t), bt(t))."""
    if target.lin_alpha_t is not None and target.lin_beta_t is not None:
        a_e, b_e = target.lin_alpha_t, target.lin_beta_t

        def coeffs(t):
            env = dict(bindings, t=t)
            return (np.broadcast_to(evaluate(a_e, env), np.shape(t)), np.broadcast_to(evaluate(b_e, env), np.shape(t)))

        return coeffs
    if phi is None:
        raise ValueError("target has no t-form; pass phi for numeric inversion")
    lo, hi = target.domain if target.domain else (-10.0, 10.0)
    lo, hi = max(lo, -50.0) + 1e-9, min(hi, 50.0) - 1e-9
    fphi = lambda x: float(evaluate(phi, dict(bindings, x=x)))  # noqa: E731

    def coeffs(t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        xs = np.array([brentq(lambda x: fphi(x) - tv, lo, hi, xtol=1e-15, rtol=1e-15) for tv in ts])
        env = dict(bindings, x=xs)
        a = np.broadcast_to(evaluate(target.lin_alpha_x, env), xs.shape)
        b = np.broadcast_to(evaluate(target.lin_beta_x, env), xs.shape)
        return (a, b) if np.ndim(t) else (float(a[0]), float(b[0]))

    return coeffs


def rk4_solve(coeffs, ics, t0: float, t1: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Classic RK4 on the companion system of u'''' + a u' + b u = 0, ``n`` fixed steps from t0 to t1.

    Returns node abscissae and the state array (n+1, 4): u, u', u'', u'''.
    """
    ts = np.linspace(t0, t1, n + 1)
    h = (t1 - t0) / n
    half = ts[:-1] + h / 2
    a0, b0 = coeffs(ts)
    ah, bh = coeffs(half)
    y = np.empty((n + 1, 4))
    y[0] = ics
    for i in range(n):
        s = y[i]

        def f(z, a, b):
            return np.array([z[1], z[2], z[3], -a * z[1] - b * z[0]])

        k1 = f(s, a0[i], b0[i])
        k2 = f(s + h / 2 * k1, ah[i], bh[i])
        k3 = f(s + h / 2 * k2, ah[i], bh[i])
        k4 = f(s + h * k3, a0[i + 1], b0[i + 1])
        y[i + 1] = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return ts, y


def richardson_estimate(coeffs, ics, t0: float, t1: float, n: int) -> float:
    """max |u_h - u_{h/2}| / (1 + max |u|) at the coarse nodes."""
    _, yh = rk4_solve(coeffs, ics, t0, t1, n)
    _, yf = rk4_solve(coeffs, ics, t0, t1, 2 * n)
    return float(np.max(np.abs(yh - yf[::2])) / (1.0 + np.max(np.abs(yf))))


def _integrate_leg(coeffs, ics, t0, t1, n, rtol, max_halvings):
    for _ in range(max_halvings + 1):
        if richardson_estimate(coeffs, ics, t0, t1, n) < rtol:
            return rk4_solve(coeffs, ics, t0, t1, 2 * n)
        n *= 2
    raise StepCollapse(f"no convergence on [{t0}, {t1}] after {max_halvings} halvings")


def integrate_linear(
    target,
    ics,
    t_range: tuple,
    t0: float | None = None,
    h: float = 1e-2,
    rtol: float = 1e-8,
    max_halvings: int = 20,
    phi: Expr | None = None,
    bindings: dict | None = None,
) -> NumericProfile:
    """Integrate the target equation from initial data (u, u', u'', u''') at ``t0``.

    The range may extend on both sides of t0; each side is integrated with RK4
    at fixed step h, halved until two successive solutions agree to ``rtol``.
    """
    a, b = map(float, t_range)
    t0 = a if t0 is None else float(t0)
    if not a <= t0 <= b or a == b:
        raise ValueError("t0 must lie in the integration range")
    coeffs = _coefficient_functions(target, phi, bindings or {})
    ics = np.asarray(ics, dtype=float)
    ts_parts, ys_parts = [], []
    if t0 > a:
        n = max(1, int(math.ceil((t0 - a) / h)))
        ts, ys = _integrate_leg(coeffs, ics, t0, a, n, rtol, max_halvings)
        ts_parts.append(ts[::-1])
        ys_parts.append(ys[::-1])
    if b > t0:
        n = max(1, int(math.ceil((b - t0) / h)))
        ts, ys = _integrate_leg(coeffs, ics, t0, b, n, rtol, max_halvings)
        if ts_parts:
            ts, ys = ts[1:], ys[1:]
        ts_parts.append(ts)
        ys_parts.append(ys)
    ts = np.concatenate(ts_parts)
    ys = np.concatenate(ys_parts)
    av, bv = coeffs(ts)
    u4 = -av * ys[:, 1] - bv * ys[:, 0]
    return NumericProfile(ts, [ys[:, 0], ys[:, 1], ys[:, 2], ys[:, 3], u4])


# ---------------------------------------------------------------- pullback


def stencil_derivatives(f: np.ndarray, h: float) -> list[np.ndarray]:
    """Fourth-order central differences of samples ``f`` (3 guard points each side).

    Returns [f, f', f'', f''', f''''] on the interior points f[3:-3].
    """
    m = len(f)
    s = lambda k: f[3 + k : m - 3 + k]  # noqa: E731
    d1 = (s(-2) - 8 * s(-1) + 8 * s(1) - s(2)) / (12 * h)
    d2 = (-s(-2) + 16 * s(-1) - 30 * s(0) + 16 * s(1) - s(2)) / (12 * h * h)
    d3 = (s(-3) - 8 * s(-2) + 13 * s(-1) - 13 * s(1) + 8 * s(2) - s(3)) / (8 * h**3)
    d4 = (-s(-3) + 12 * s(-2) - 39 * s(-1) + 56 * s(0) - 39 * s(1) + 12 * s(2) - s(3)) / (6 * h**4)
    return [s(0), d1, d2, d3, d4]


def _phi_poles_clear(phi: Expr, xs: np.ndarray, bindings: dict, margin: float):
    if isinstance(phi, Kernel) and phi.tag == "tan":
        u = np.asarray(evaluate(phi.arg, dict(bindings, x=xs)), dtype=float)
        dist = np.abs(np.remainder(u - np.pi / 2, np.pi))
        dist = np.minimum(dist, np.pi - dist)
        if np.any(dist < margin):
            raise DomainError(f"grid comes within {margin} of a pole of {phi}")


def invert_psi(psi: Expr, xs: np.ndarray, target_values: np.ndarray, p: dict) -> np.ndarray:
    """Solve psi(x, y) = value for y on the branch nu*y + mu*D^2 > 0."""
    deg = polynomial_degree(psi, "y")
    env = dict(p, x=xs)
    c0 = np.broadcast_to(evaluate(substitute(psi, "y", 0), env), xs.shape)
    c1 = np.broadcast_to(evaluate(substitute(differentiate(psi, "y"), "y", 0), env), xs.shape)
    rhs = target_values - c0
    if deg == 1:
        return rhs / c1
    if deg != 2:
        raise ValueError(f"psi must be linear or quadratic in y, got degree {deg}")
    c2 = np.broadcast_to(evaluate(substitute(differentiate(psi, "y", 2), "y", 0), env), xs.shape) / 2
    disc = c1 * c1 + 4 * c2 * rhs
    if np.any(disc < 0):
        raise DiscriminantNegative("psi(x, y) = u has no real solution", point={"x": float(xs[np.argmin(disc)])})
    r = np.sqrt(disc)
    roots = [(-c1 + r) / (2 * c2), (-c1 - r) / (2 * c2)]
    lead = [p["nu"] * y + p["mu"] * p["D"] ** 2 for y in roots]
    ok0, ok1 = lead[0] > 0, lead[1] > 0
    if np.any(ok0 == ok1):
        raise BranchUndefined("no unique root with nu*y + mu*D^2 > 0")
    return np.where(ok0, roots[0], roots[1])


def pullback(tr, profile: NumericProfile, p: PdeParams, g: GridSpec) -> NumericProfile:
    """H(x) on the grid from a target solution u~(t~): t~ = phi(x), psi(x, H) = u~(t~)."""
    v = p.values()
    xs = g.xs()
    h = xs[1] - xs[0]
    ext = np.concatenate([xs[0] + h * np.arange(-3, 0), xs, xs[-1] + h * np.arange(1, 4)])
    _phi_poles_clear(tr.phi, ext, v, g.margin)
    tt = np.broadcast_to(evaluate(tr.phi, dict(v, x=ext)), ext.shape)
    ut = profile.hermite(tt)
    H = invert_psi(tr.psi, ext, ut, v)
    return NumericProfile(xs, stencil_derivatives(H, h))


# ---------------------------------------------------------------- condition oracle


@dataclass
class OracleResult:
    residuals: list[float]  # per condition, max over admissible points
    n_points: int
    n_skipped: int


def _fd(f, x, y, h, var: str, order: int):
    """Fourth-order central difference of f(x, y) in one variable."""
    def at(k):
        return f(x + k * h, y) if var == "x" else f(x, y + k * h)

    if order == 1:
        return (at(-2) - 8 * at(-1) + 8 * at(1) - at(2)) / (12 * h)
    if order == 2:
        return (-at(-2) + 16 * at(-1) - 30 * at(0) + 16 * at(1) - at(2)) / (12 * h * h)
    raise ValueError(order)


def _fd_reliable(funcs: dict, x, y, h: float, tol: float) -> bool:
    """Difference quotients at steps h and 2h agree (the point is far enough from any pole)."""
    for f in funcs.values():
        for var in ("x", "y"):
            d1, d2 = _fd(f, x, y, h, var, 1), _fd(f, x, y, 2 * h, var, 1)
            if np.any(np.abs(d1 - d2) > tol * (1.0 + np.abs(d1))):
                return False
    return True


def condition_sample_oracle(
    c: OdeCoefficients,
    params: dict | None = None,
    seed: int = 0,
    n: int = 50,
    h: float = 1e-3,
    smooth_tol: float = 1e-9,
) -> OracleResult:
    """Brute-force float evaluation of the ten conditions with finite-difference derivatives.

    Shares nothing with the symbolic path except the coefficient expressions
    themselves, which are only ever evaluated pointwise here.  Candidate
    points where the h and 2h difference quotients disagree by more than
    ``smooth_tol`` sit too close to a singularity and are skipped.
    """
    params = {k: float(v) for k, v in (params or {}).items()}
    pts = sample_points(("x", "y"), 4 * n, seed)
    funcs = {}
    for name in SLOTS:
        e = getattr(c, name)

        def f(x, y, e=e):
            return np.broadcast_to(np.asarray(evaluate(e, dict(params, x=x, y=y)), dtype=float), np.shape(x))

        funcs[name] = f
    good_x, good_y = [], []
    examined = 0
    for x, y in zip(pts["x"], pts["y"]):
        examined += 1
        try:
            vals = [funcs[s](np.array([x - 3 * h, x, x + 3 * h]), np.array([y - 3 * h, y, y + 3 * h])) for s in SLOTS]
        except DomainError:
            continue
        if not all(np.all(np.isfinite(v)) and np.all(np.abs(v) < 1e6) for v in vals):
            continue
        if not _fd_reliable(funcs, np.array([x]), np.array([y]), h, smooth_tol):
            continue
        good_x.append(x)
        good_y.append(y)
        if len(good_x) == n:
            break
    x, y = np.array(good_x), np.array(good_y)
    F = funcs
    A1, A0, B0, C2, C1, C0 = (F[k](x, y) for k in ("A1", "A0", "B0", "C2", "C1", "C0"))
    D4, D3, D2, D1, D0 = (F[k](x, y) for k in ("D4", "D3", "D2", "D1", "D0"))
    A0x, A0y = _fd(F["A0"], x, y, h, "x", 1), _fd(F["A0"], x, y, h, "y", 1)
    A1x, A1y = _fd(F["A1"], x, y, h, "x", 1), _fd(F["A1"], x, y, h, "y", 1)
    C0x, C0y = _fd(F["C0"], x, y, h, "x", 1), _fd(F["C0"], x, y, h, "y", 1)
    C1x, C1y = _fd(F["C1"], x, y, h, "x", 1), _fd(F["C1"], x, y, h, "y", 1)
    C2y = _fd(F["C2"], x, y, h, "y", 1)
    D2x, D1y, D0y = _fd(F["D2"], x, y, h, "x", 1), _fd(F["D1"], x, y, h, "y", 1), _fd(F["D0"], x, y, h, "y", 1)
    D0yy = _fd(F["D0"], x, y, h, "y", 2)
    D1xy = _fd(lambda xx, yy: _fd(F["D1"], xx, yy, h, "y", 1), x, y, h, "x", 1)

    P = 3 * A0 * A1 - 4 * C1
    conds = [
        [A0y, -A1x],
        [4 * B0, -3 * A1],
        [12 * A1y, 3 * A1**2, -8 * C2],
        [12 * A1x, 3 * A0 * A1, -4 * C1],
        [32 * C0y, 12 * A0x * A1, -16 * C1x, 3 * A0**2 * A1, -4 * A0 * C1],
        [4 * C2y, A1 * C2, -24 * D4],
        [4 * C1y, A1 * C1, -12 * D3],
        [16 * C1x, -12 * A0x * A1, -3 * A0**2 * A1, 4 * A0 * C1, 8 * A1 * C0, -32 * D2],
        [
            192 * D2x,
            36 * A0x * A0 * A1,
            -48 * A0x * C1,
            -48 * C0x * A1,
            -288 * D1y,
            9 * A0**3 * A1,
            -12 * A0**2 * C1,
            -36 * A0 * A1 * C0,
            48 * A0 * D2,
            32 * C0 * C1,
        ],
        [
            384 * D1xy,
            -3 * (P * A0**2 + 16 * (2 * A1 * D1 + C0 * C1) - 16 * (A1 * C0 - D2) * A0) * A0,
            32 * (4 * (C1 * D1 - 2 * C2 * D0 + C0 * D2) + (3 * A1 * D0 - C0**2) * A1),
            96 * D1y * A0,
            -384 * D0y * A1,
            -1536 * D0yy,
            16 * P * C0x,
            -12 * (P * A0 - 4 * (A1 * C0 - 4 * D2)) * A0x,
        ],
    ]
    residuals = []
    for terms in conds:
        arr = np.array(np.broadcast_arrays(*terms), dtype=float)
        r = np.abs(arr.sum(axis=0)) / (1.0 + np.abs(arr).max(axis=0))
        residuals.append(float(r.max()) if r.size else 0.0)
    return OracleResult(residuals, len(good_x), examined - len(good_x))


__all__ = [
    "GridSpec",
    "NumericProfile",
    "pde_residual",
    "implicit_jet",
    "rk4_solve",
    "richardson_estimate",
    "integrate_linear",
    "stencil_derivatives",
    "invert_psi",
    "pullback",
    "OracleResult",
    "condition_sample_oracle",
]
