"""Command-line front end: ``linearize4 {reduce,check,build,solve,verify,cases}``.

Input is a JSON config and/or flags (flags win).  Output is a JSON report
with sorted keys and 17-significant-digit floats, or a plain-text table with
``--pretty``.  Exit codes: 0 success, 1 not linearizable, 2 input error,
3 verification failure.
"""

from __future__ import annotations

import argparse
from fractions import Fraction
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .construct import linearize
from .errors import DomainError, ExprSyntaxError, Linearize4Error, NotLinearizable
from .expr import Rational, evaluate, parse, sym, to_string
from .lincheck import is_linearizable
from .odemodel import residual_of_profile
from .reduction import PARAM_NAMES, PdeParams, classify, closed_form, reduce
from .verify import GridSpec, integrate_linear, pde_residual, pullback

COMMANDS = ("reduce", "check", "build", "solve", "verify", "cases")
TOP_KEYS = {"command", "params", "options"}
OPTION_KEYS = {"seed", "tol", "grid", "constants", "out"}
GRID_KEYS = ("x_min", "x_max", "nx", "t_min", "t_max", "nt", "margin")

EXIT_OK, EXIT_NOT_LINEARIZABLE, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3

DEFAULT_CLASSIFY_TOL = 1e-9
DEFAULT_CLOSED_FORM_TOL = 1e-8
DEFAULT_PULLBACK_TOL = 1e-5
PULLBACK_STEP = 1e-3
PULLBACK_TRIALS = 5

# parameter sets used by `cases`: one representative per family
REFERENCE_CASES = (
    ("Case1", {"alpha": 0, "beta": 0, "gamma": 0, "mu": 1, "nu": 0, "kappa": 2, "D": 1}, (1, 0.5, 0, 0)),
    ("Case21a", {"alpha": 0, "beta": 0, "gamma": 0, "mu": 1, "nu": 1, "kappa": 1, "D": 1}, (1, 0, 0, 1)),
    ("Case21b", {"alpha": 4, "beta": 3, "gamma": 0, "mu": 1, "nu": 1, "kappa": 1, "D": 1}, (1, 1, 0.2, 0.1)),
    ("Case22", {"alpha": 4, "beta": 3, "gamma": "5/4", "mu": 1, "nu": 1, "kappa": "7/2", "D": 1}, (0, 0, 0, 0)),
)


class InputError(Exception):
    pass


# ---------------------------------------------------------------- serialisation


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return "%.17g" % v


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(str(obj), ensure_ascii=False)


def render_pretty(report: dict) -> str:
    lines = [f"command: {report['input']['command']}"]
    params = report["input"]["params"]
    if params:
        lines.append("params: " + ", ".join(f"{k}={params[k]}" for k in PARAM_NAMES if k in params))
    for key in sorted(report):
        if key == "input":
            continue
        val = report[key]
        if key == "linearization":
            lines.append(f"verdict: {'linearizable' if val['verdict'] else 'NOT linearizable'}")
            lines.append(f"{'cond':>4}  {'ok':<4}  {'max residual':>12}  expression")
            for row in val["conditions"]:
                mark = "yes" if row["satisfied"] else "NO"
                lines.append(f"{row['index']:>4}  {mark:<4}  {row['max_residual']:>12.3e}  {row['expression']}")
            for fam in val.get("constraints", []):
                parts = [f"{k} != 0" for k in fam["nonzero"]] + [f"{k} = {v}" for k, v in fam["assignments"].items()]
                lines.append("family: " + ", ".join(parts))
        elif key == "cases":
            lines.append(f"{'case':<9} {'tag':<9} {'residual':>12}  {'tol':>8}  pass")
            for row in val:
                lines.append(f"{row['case']:<9} {row['tag']:<9} {row['residual']:>12.3e}  {row['tol']:>8.0e}  {row['pass']}")
        elif isinstance(val, dict):
            lines.append(f"{key}:")
            for k in sorted(val):
                lines.append(f"  {k}: {val[k]}")
        else:
            lines.append(f"{key}: {val}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- config


def _parse_value(v):
    if isinstance(v, bool):
        raise InputError("boolean is not a valid parameter value")
    if isinstance(v, (int, float)):
        return Rational(v) if isinstance(v, int) else _float_expr(v)
    if isinstance(v, str):
        try:
            return parse(v)
        except ExprSyntaxError as exc:
            raise InputError(f"cannot parse {v!r}: {exc}") from None
    raise InputError(f"parameter value {v!r} must be a number or expression string")


def _float_expr(v: float):
    if not math.isfinite(v):
        raise InputError("parameter values must be finite")
    # JSON 0.1 means 1/10: go through the shortest decimal repr, not the binary value
    return Rational(Fraction(repr(v)))


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    return cfg


def validate_config(cfg: dict) -> None:
    extra = set(cfg) - TOP_KEYS
    if extra:
        raise InputError(f"unknown config keys: {sorted(extra)}")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise InputError("params must be an object")
    extra = set(params) - set(PARAM_NAMES)
    if extra:
        raise InputError(f"unknown parameters: {sorted(extra)}")
    opts = cfg.get("options", {})
    if not isinstance(opts, dict):
        raise InputError("options must be an object")
    extra = set(opts) - OPTION_KEYS
    if extra:
        raise InputError(f"unknown options: {sorted(extra)}")
    grid = opts.get("grid", {})
    if not isinstance(grid, dict):
        raise InputError("options.grid must be an object")
    extra = set(grid) - set(GRID_KEYS)
    if extra:
        raise InputError(f"unknown grid keys: {sorted(extra)}")
    if "constants" in opts:
        cs = opts["constants"]
        if not isinstance(cs, list) or len(cs) != 4 or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in cs):
            raise InputError("options.constants must be a list of 4 numbers")
    if "seed" in opts and (not isinstance(opts["seed"], int) or isinstance(opts["seed"], bool)):
        raise InputError("options.seed must be an integer")
    if "tol" in opts and (not isinstance(opts["tol"], (int, float)) or opts["tol"] <= 0):
        raise InputError("options.tol must be a positive number")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linearize4", description="Linearization of fourth-order traveling-wave ODEs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="subcommand (may also come from the config)")
    ap.add_argument("--config", help="JSON job config")
    for name in PARAM_NAMES:
        ap.add_argument(f"--{name}", help=f"PDE parameter {name} (number or expression)")
    ap.add_argument("--seed", type=int, help="sampling seed (default: LINEARIZE4_SEED, else 0)")
    ap.add_argument("--tol", type=float, help="classification or residual tolerance, depending on the command")
    for key in GRID_KEYS:
        kind = int if key in ("nx", "nt") else float
        ap.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, help="verification grid")
    ap.add_argument("--constants", type=float, nargs=4, metavar="C", help="integration constants C1..C4")
    ap.add_argument("--out", help="write the report here instead of standard output")
    ap.add_argument("--pretty", action="store_true", help="human-readable table instead of JSON")
    return ap


def resolve(args: argparse.Namespace) -> dict:
    """Merge config file and flags into one validated job description."""
    cfg = load_config(args.config)
    validate_config(cfg)
    command = args.command or cfg.get("command")
    if command not in COMMANDS:
        raise InputError(f"command must be one of {', '.join(COMMANDS)}")
    params = dict(cfg.get("params", {}))
    for name in PARAM_NAMES:
        v = getattr(args, name)
        if v is not None:
            params[name] = v
    opts = dict(cfg.get("options", {}))
    grid = dict(opts.get("grid", {}))
    for key in GRID_KEYS:
        v = getattr(args, key)
        if v is not None:
            grid[key] = v
    if args.seed is not None:
        opts["seed"] = args.seed
    if "seed" not in opts:
        env = os.environ.get("LINEARIZE4_SEED")
        try:
            opts["seed"] = int(env) if env is not None else 0
        except ValueError:
            raise InputError(f"LINEARIZE4_SEED must be an integer, got {env!r}") from None
    if args.tol is not None:
        opts["tol"] = args.tol
    if args.constants is not None:
        opts["constants"] = list(args.constants)
    out = args.out or opts.get("out")
    opts.pop("out", None)
    if grid:
        opts["grid"] = grid
    job = {"command": command, "params": params, "options": opts}
    validate_config(job)
    return {**job, "out": out, "pretty": args.pretty}


def _pde_params(raw: dict, symbolic_default: bool) -> PdeParams:
    vals = {}
    for name in PARAM_NAMES:
        if name in raw:
            vals[name] = _parse_value(raw[name])
        elif symbolic_default:
            vals[name] = sym(name)
        else:
            raise InputError(f"parameter {name} is required for this command")
    return PdeParams(**vals)


def _grid(opts: dict, default: dict) -> GridSpec:
    g = dict(default)
    g.update(opts.get("grid", {}))
    try:
        return GridSpec(**{k: g[k] for k in GRID_KEYS})
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad grid: {exc}") from None


# ---------------------------------------------------------------- commands


def _echo(job: dict, p: PdeParams | None) -> dict:
    params = {k: to_string(v) for k, v in p.as_dict().items()} if p is not None else {}
    return {"command": job["command"], "params": params, "options": job["options"]}


def cmd_reduce(job):
    p = _pde_params(job["params"], True)
    report = {"input": _echo(job, p), "coefficients": reduce(p).as_strings()}
    return EXIT_OK, report


def cmd_check(job):
    p = _pde_params(job["params"], True)
    opts = job["options"]
    lr = is_linearizable(reduce(p), seed=opts["seed"], tol=opts.get("tol", DEFAULT_CLASSIFY_TOL))
    report = {"input": _echo(job, p), "linearization": lr.to_dict()}
    if p.is_numeric:
        report["case"] = classify(p, opts.get("tol", DEFAULT_CLASSIFY_TOL)).tag
        return (EXIT_OK if lr.verdict else EXIT_NOT_LINEARIZABLE), report
    # symbolic parameters: the result is the list of linearizable families
    return EXIT_OK, report


def cmd_build(job):
    p = _pde_params(job["params"], True)
    opts = job["options"]
    try:
        tr, tg = linearize(reduce(p), seed=opts["seed"])
    except NotLinearizable as exc:
        return EXIT_NOT_LINEARIZABLE, {"input": _echo(job, p), "linearization": exc.report.to_dict()}
    report = {"input": _echo(job, p), "transformation": tr.to_dict(), "target": tg.to_dict()}
    return EXIT_OK, report


def cmd_solve(job):
    p = _pde_params(job["params"], False)
    opts = job["options"]
    tag = classify(p, opts.get("tol", DEFAULT_CLASSIFY_TOL))
    report = {"input": _echo(job, p), "case": tag.tag}
    if tag.tag == "NotLinearizable":
        return EXIT_NOT_LINEARIZABLE, report
    sd = closed_form(tag, p, opts.get("constants", (1, 0, 0, 0)))
    report["solution"] = sd.to_dict()
    if sd.target is not None:
        tr, tg = sd.target
        report["transformation"] = tr.to_dict()
        report["target"] = tg.to_dict()
    return EXIT_OK, report


def default_grid(tag: str, p: PdeParams) -> dict:
    if tag == "Case22":
        v = p.values()
        k = math.sqrt(v["gamma"] / (5 * v["nu"]))
        return {"x_min": -1.2 / k, "x_max": 1.2 / k, "nx": 481, "t_min": 0.0, "t_max": 0.0, "nt": 1, "margin": 0.1}
    if tag == "Case21b":
        return {"x_min": 0.0, "x_max": 3.0, "nx": 100, "t_min": 0.0, "t_max": 1.0, "nt": 20, "margin": 0.1}
    return {"x_min": -3.0, "x_max": 3.0, "nx": 100, "t_min": 0.0, "t_max": 1.0, "nt": 20, "margin": 0.1}


def seeded_initial_conditions(seed: int, count: int = PULLBACK_TRIALS) -> list[list[float]]:
    rng = np.random.default_rng(seed)
    return [[float(rng.uniform(0.5, 2.0))] + [float(v) for v in rng.uniform(-0.2, 0.2, 3)] for _ in range(count)]


def case22_end_to_end(p: PdeParams, g: GridSpec, seed: int, trials: int = PULLBACK_TRIALS) -> list[dict]:
    """Integrate the target for seeded initial data, pull back, and measure the ODE residual."""
    tr, tg = linearize(reduce(p), seed=seed)
    v = p.values()
    xs = g.xs()
    h = xs[1] - xs[0]
    ends = evaluate(tr.phi, dict(v, x=np.array([xs[0] - 4 * h, xs[-1] + 4 * h])))
    t_range = (float(min(ends)), float(max(ends)))
    c = reduce(p)
    rows = []
    for ics in seeded_initial_conditions(seed, trials):
        prof = integrate_linear(tg, ics, t_range, t0=0.0, h=PULLBACK_STEP)
        H = pullback(tr, prof, p, g)
        rows.append({"ics": ics, "residual": residual_of_profile(c, H, H.abscissae, {})})
    return rows


def _verify_one(tag: str, p: PdeParams, constants, opts: dict) -> dict:
    grid = _grid(opts, default_grid(tag, p))
    if tag == "Case22":
        tol = opts.get("tol", DEFAULT_PULLBACK_TOL)
        rows = case22_end_to_end(p, grid, opts["seed"])
        worst = max(r["residual"] for r in rows)
        return {"tag": tag, "method": "pullback", "trials": rows, "residual": worst, "tol": tol, "pass": worst < tol}
    tol = opts.get("tol", DEFAULT_CLOSED_FORM_TOL)
    sd = closed_form(tag, p, constants)
    r = pde_residual(sd, p, grid)
    return {"tag": tag, "method": "pde_residual", "solution": sd.to_dict(), "residual": r, "tol": tol, "pass": r < tol}


def cmd_verify(job):
    p = _pde_params(job["params"], False)
    opts = job["options"]
    tag = classify(p, DEFAULT_CLASSIFY_TOL).tag
    report = {"input": _echo(job, p), "case": tag}
    if tag == "NotLinearizable":
        return EXIT_NOT_LINEARIZABLE, report
    try:
        res = _verify_one(tag, p, opts.get("constants", (1, 0, 0, 0)), opts)
    except DomainError as exc:
        report["error"] = str(exc)
        return EXIT_VERIFY, report
    report["verification"] = res
    return (EXIT_OK if res["pass"] else EXIT_VERIFY), report


def cmd_cases(job):
    opts = job["options"]
    rows = []
    for name, raw, constants in REFERENCE_CASES:
        p = _pde_params(raw, False)
        tag = classify(p).tag
        o = {k: v for k, v in opts.items() if k != "grid"}
        res = _verify_one(tag, p, constants, o)
        rows.append({"case": name, "tag": tag, "params": {k: str(raw[k]) for k in PARAM_NAMES}, "residual": res["residual"], "tol": res["tol"], "pass": bool(res["pass"] and tag == name)})
    report = {"input": _echo(job, None), "cases": rows}
    return (EXIT_OK if all(r["pass"] for r in rows) else EXIT_VERIFY), report


HANDLERS = {
    "reduce": cmd_reduce,
    "check": cmd_check,
    "build": cmd_build,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "cases": cmd_cases,
}


def run(argv=None) -> tuple[int, dict | None]:
    """Execute one job; returns (exit code, report or None on input errors)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_INPUT if exc.code else EXIT_OK), None
    try:
        job = resolve(args)
        code, report = HANDLERS[job["command"]](job)
    except InputError as exc:
        print(f"linearize4: error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except Linearize4Error as exc:
        print(f"linearize4: error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    text = render_pretty(report) if job["pretty"] else dumps(report) + "\n"
    if job["out"]:
        with open(job["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code, report


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
