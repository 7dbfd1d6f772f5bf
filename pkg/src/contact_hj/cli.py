"""Command-line entry point.

    contact-hj solve --c 1 --out out/
    contact-hj critical
    contact-hj flow --x0 1 --p0 0.5 --t-end 5
    contact-hj reproduce-figure --c-list 0.8,1,2
    contact-hj compare --c 1

Options may also come from a flat ``key = value`` file given by
``--config``; command-line flags win over the file, which wins over the
built-in defaults.  Exit codes: 0 success, 1 configuration error,
2 divergence, 3 no certified result (not converged or residual gate failed).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import artifacts
from .characteristics import ContactState, assemble_solutions, rk4_integrate
from .critical import estimate_critical_value
from .errors import ContactHJError, ConfigurationError, DivergenceError
from .model import TWO_PI, GridFunction, TrigPoly, make_grid, quadratic_model, toy_model
from .semigroup import (BACKWARD, default_step_params, residual_report, solution_pair,
                        solve_fixed_point)

log = logging.getLogger("contact_hj")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_UNCERTIFIED = 3


@dataclass
class RunConfig:
    model: str = "toy"
    shift: float = 0.0
    c: float = 1.0
    n: int = 2048
    delta: float = 1e-3
    tol: float = 1e-8
    t_max: float = 400.0
    horizon: float = 50.0
    out: str = "out"
    seed_function: str = "zero"
    gate: float = 2e-2
    workers: int = 1
    c_list: str = "0.8,1,2"
    crit_tol: float = 0.02

    def validate(self):
        if self.n < 16:
            raise ConfigurationError(f"n must be at least 16, got {self.n}")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if not (self.tol > 0 and self.t_max > 0 and self.gate > 0):
            raise ConfigurationError("tol, t-max and gate must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CAST = {"str": str, "int": int, "float": float}


def _cast(key, value):
    typ = _CAST[_TYPES[key]]
    try:
        return typ(value)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {value!r}") from exc


def build_config(args):
    """Merge defaults, the config file and explicit flags (in that order)."""
    values = {}
    if getattr(args, "config", None):
        for key, val in artifacts.read_config(args.config).items():
            if key not in _TYPES:
                raise ConfigurationError(f"unknown config key {key!r}")
            values[key] = _cast(key, val)
    for key in _TYPES:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return RunConfig(**values).validate()


# ---------------------------------------------------------------------------
# models and seeds


def _poly(table, key):
    cos = [float(v) for v in table.get(f"{key}_cos", "0").split(",")]
    sin = [float(v) for v in table.get(f"{key}_sin", "0").split(",")]
    return TrigPoly(tuple(cos), tuple(sin))


def make_model(selector, c, shift=0.0):
    """``toy``, ``unit-lambda`` or ``file:<path>`` with trigonometric tables
    ``a_cos``, ``a_sin``, ``b_cos``, ... ``lam_sin`` (comma-separated)."""
    if selector == "toy":
        m = toy_model(c)
    elif selector == "unit-lambda":
        m = quadratic_model(1.0, 0.0, 0.0, 1.0, c=c, name="unit-lambda")
    elif selector.startswith("file:"):
        table = artifacts.read_config(selector[5:])
        a = _poly(table, "a") if ("a_cos" in table or "a_sin" in table) else TrigPoly.constant(1.0)
        try:
            m = quadratic_model(a, _poly(table, "b"), _poly(table, "e"), _poly(table, "lam"), c=c,
                                name=os.path.basename(selector[5:]))
        except ValueError as exc:
            raise ConfigurationError(f"bad model table {selector[5:]}: {exc}") from exc
    else:
        raise ConfigurationError(f"unknown model {selector!r}")
    if shift:
        m = m.shifted(shift)
    return m


def make_seed(selector, grid, c):
    if selector == "zero":
        return GridFunction.constant(grid, 0.0)
    if selector == "const-c":
        return GridFunction.constant(grid, c)
    if selector.startswith("file:"):
        return artifacts.load_seed(selector[5:], grid)
    raise ConfigurationError(f"unknown seed function {selector!r}")


def _setup(cfg, c=None):
    c = cfg.c if c is None else c
    grid = make_grid(cfg.n)
    m = make_model(cfg.model, c, cfg.shift)
    sp = default_step_params(m, grid, cfg.delta, tol=cfg.tol, t_max=cfg.t_max)
    return grid, m, sp


def _ctag(c):
    return f"{c:g}"


# ---------------------------------------------------------------------------
# solve


@dataclass
class SolveResult:
    paths: dict
    residuals: dict
    converged: bool
    gate_ok: bool
    distance: float


def run_solve(cfg):
    grid, m, sp = _setup(cfg)
    seed = make_seed(cfg.seed_function, grid, cfg.c)
    pair = solution_pair(seed, m, sp)
    out = artifacts.ensure_dir(cfg.out)
    sols = {
        "u_minus": (pair.u_minus, "concave"),
        "u_bar_minus": (pair.u_bar_minus, "concave"),
        "u_plus": (pair.u_plus, "convex"),
    }
    paths, residuals, gate_ok = {}, {}, True
    for name, (rep, kind) in sols.items():
        paths[name] = artifacts.write_grid_csv(os.path.join(out, f"{name}.csv"), rep.solution)
        rr = residual_report(rep.solution, m)
        residuals[name] = rr
        gate_ok &= rr.passes(cfg.gate, kind)
    lines = []
    for name, (rep, kind) in sols.items():
        rr = residuals[name]
        lines += [
            f"{name}.converged={rep.converged}",
            f"{name}.t={artifacts.fmt(rep.t)}",
            f"{name}.final_rate={artifacts.fmt(rep.final_residual)}",
            f"{name}.monotone_violations={rep.monotone_violations}",
            f"{name}.max_smooth_residual={artifacts.fmt(rr.max_smooth_residual)}",
            f"{name}.concave_kinks={len(rr.concave_kinks)}",
            f"{name}.convex_kinks={len(rr.convex_kinks)}",
            f"{name}.gate={'pass' if rr.passes(cfg.gate, kind) else 'fail'}",
        ]
    dist = pair.u_minus.solution.distance(pair.u_bar_minus.solution)
    lines.append(f"distance_u_minus_u_bar_minus={artifacts.fmt(dist)}")
    lines.append(f"gate={artifacts.fmt(cfg.gate)}")
    paths["report"] = os.path.join(out, "residuals.txt")
    with open(paths["report"], "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    panel = artifacts.Panel(f"{m.name}, c = {_ctag(cfg.c)}", [
        artifacts.grid_curve("u_minus", pair.u_minus.solution),
        artifacts.grid_curve("u_bar_minus", pair.u_bar_minus.solution),
        artifacts.grid_curve("u_plus", pair.u_plus.solution, dashed=True),
    ])
    paths["svg"] = artifacts.write_svg(os.path.join(out, "solve.svg"), [panel])
    return SolveResult(paths, residuals, pair.converged, gate_ok, dist)


# ---------------------------------------------------------------------------
# figure


@dataclass
class FigureCase:
    c: float
    u0: np.ndarray
    u1: np.ndarray
    sg_u0: np.ndarray = None
    sg_u1: np.ndarray = None
    seconds: float = 0.0


def figure_case(cfg, c, semigroup=True):
    """Both pipelines at level ``c``: fronts, and the semigroup limits from
    ``const-c`` (upper solution) and zero-forward-then-backward (lower)."""
    t0 = time.perf_counter()
    grid, m, sp = _setup(cfg, c)
    u0, u1 = assemble_solutions(m, c, grid)
    case = FigureCase(c, u0.values, u1.values)
    if semigroup:
        upper = solve_fixed_point(GridFunction.constant(grid, c), m, sp, BACKWARD, monotone=True)
        lower = solution_pair(GridFunction.constant(grid, 0.0), m, sp).u_bar_minus
        case.sg_u1 = upper.solution.values
        case.sg_u0 = lower.solution.values
    case.seconds = time.perf_counter() - t0
    return case


def _figure_job(args):
    return figure_case(*args)


def parse_c_list(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    try:
        cs = [float(s) for s in items]
    except ValueError as exc:
        raise ConfigurationError(f"bad c list {text!r}") from exc
    for c in cs:
        if not c > 0:
            raise ConfigurationError(f"figure levels must be positive, got {c:g}")
    return cs


def run_reproduce_figure(cfg, c_list, semigroup=True):
    if not c_list:
        return {}
    out = artifacts.ensure_dir(cfg.out)
    jobs = [(cfg, c, semigroup) for c in c_list]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as ex:
            cases = list(ex.map(_figure_job, jobs))
    else:
        cases = [_figure_job(j) for j in jobs]
    grid = make_grid(cfg.n)
    paths, panels, rows = {}, [], []
    for case in cases:
        tag = _ctag(case.c)
        u0, u1 = GridFunction(grid, case.u0), GridFunction(grid, case.u1)
        paths[f"u0_c{tag}"] = artifacts.write_grid_csv(os.path.join(out, f"u0_c{tag}.csv"), u0)
        paths[f"u1_c{tag}"] = artifacts.write_grid_csv(os.path.join(out, f"u1_c{tag}.csv"), u1)
        curves = [artifacts.grid_curve("u0", u0), artifacts.grid_curve("u1", u1)]
        row = [case.c, u0.distance(GridFunction.from_callable(grid, np.sin)),
               str(bool(np.all(case.u0 <= case.u1)))]
        if case.sg_u0 is not None:
            s0, s1 = GridFunction(grid, case.sg_u0), GridFunction(grid, case.sg_u1)
            paths[f"semigroup_u0_c{tag}"] = artifacts.write_grid_csv(
                os.path.join(out, f"semigroup_u0_c{tag}.csv"), s0)
            paths[f"semigroup_u1_c{tag}"] = artifacts.write_grid_csv(
                os.path.join(out, f"semigroup_u1_c{tag}.csv"), s1)
            curves += [artifacts.grid_curve("semigroup u0", s0, dashed=True),
                       artifacts.grid_curve("semigroup u1", s1, dashed=True)]
            row += [u0.distance(s0), u1.distance(s1)]
        rows.append(row)
        panels.append(artifacts.Panel(f"c = {tag}", curves))
    header = ["c", "u0_vs_sin", "u0_le_u1"]
    if semigroup:
        header += ["u0_vs_semigroup", "u1_vs_semigroup"]
    paths["distances"] = artifacts.write_rows(os.path.join(out, "distances.csv"), header, rows)
    paths["svg"] = artifacts.write_svg(os.path.join(out, "figure.svg"), panels)
    for row in rows:
        log.info(" ".join(f"{h}={artifacts.fmt(v) if not isinstance(v, str) else v}"
                          for h, v in zip(header, row)))
    return paths


# ---------------------------------------------------------------------------
# critical, flow, compare


def run_critical(cfg, c_lo=None, c_hi=None):
    grid = make_grid(cfg.n)
    m = make_model(cfg.model, 0.0, cfg.shift)
    est = estimate_critical_value(m, c_lo, c_hi, cfg.crit_tol, grid=grid, delta=cfg.delta,
                                  horizon=cfg.horizon)
    return est


def run_flow(cfg, x0, p0, u0, t_end, h, stride=1):
    m = make_model(cfg.model, cfg.c, cfg.shift)
    if u0 is None:
        lam = float(m.lam(x0))
        if abs(lam) < 1e-12:
            raise ConfigurationError("cannot place the start on the shell where lam vanishes; give --u0")
        u0 = (cfg.c - float(m.h(x0, p0))) / lam
    tr = rk4_integrate(ContactState(x0, p0, u0), (0.0, t_end), h, m)
    H = tr.energy(m)
    idx = np.arange(0, len(tr), stride)
    if idx[-1] != len(tr) - 1:
        idx = np.append(idx, len(tr) - 1)
    out = artifacts.ensure_dir(cfg.out)
    path = artifacts.write_rows(os.path.join(out, "flow.csv"), ("t", "x", "p", "u", "H"),
                                zip(tr.t[idx], tr.x[idx], tr.p[idx], tr.u[idx], H[idx]))
    return path, float(np.max(np.abs(H - cfg.c)))


def run_compare(cfg, files=()):
    """Sup-distances between two CSV files, or between the pipelines at ``cfg.c``."""
    if files:
        if len(files) != 2:
            raise ConfigurationError("compare takes exactly two CSV files")
        (xa, ua), (xb, ub) = (artifacts.read_xy_csv(f) for f in files)
        if xa.shape != xb.shape or not np.allclose(xa, xb, atol=1e-9):
            ub = np.interp(np.mod(xa, TWO_PI), np.mod(xb, TWO_PI), ub, period=TWO_PI)
        return {"sup_distance": float(np.max(np.abs(ua - ub)))}
    case = figure_case(cfg, cfg.c)
    return {
        "u0_vs_semigroup": float(np.max(np.abs(case.u0 - case.sg_u0))),
        "u1_vs_semigroup": float(np.max(np.abs(case.u1 - case.sg_u1))),
        "u0_le_u1": bool(np.all(case.u0 <= case.u1)),
        "seconds": case.seconds,
    }


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="flat key=value file with defaults for any option")
    p.add_argument("--model", help="toy, unit-lambda or file:<path> (default toy)")
    p.add_argument("--shift", type=float, help="add a constant to h")
    p.add_argument("--c", type=float, help="right-hand constant (default 1)")
    p.add_argument("--n", type=int, help="grid nodes (default 2048)")
    p.add_argument("--delta", type=float, help="time step (default 1e-3)")
    p.add_argument("--tol", type=float, help="change per unit time at convergence (default 1e-8)")
    p.add_argument("--t-max", dest="t_max", type=float, help="iteration horizon (default 400)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--seed-function", dest="seed_function",
                   help="zero, const-c or file:<path> (default zero)")
    p.add_argument("--workers", type=int, help="process pool size (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = _Parser(prog="contact-hj", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="backward/forward semigroup fixed points")
    _common(p)
    p.add_argument("--gate", type=float, help="residual gate on smooth nodes (default 2e-2)")

    p = sub.add_parser("critical", help="estimate the critical value")
    _common(p)
    p.add_argument("--horizon", type=float, help="probe horizon (default 50)")
    p.add_argument("--crit-tol", dest="crit_tol", type=float, help="bisection tolerance (default 0.02)")
    p.add_argument("--c-lo", dest="c_lo", type=float)
    p.add_argument("--c-hi", dest="c_hi", type=float)

    p = sub.add_parser("flow", help="dump a characteristic trajectory")
    _common(p)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--p0", type=float, default=1.0)
    p.add_argument("--u0", type=float, default=None, help="default: on the shell H = c")
    p.add_argument("--t-end", dest="t_end", type=float, default=5.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--stride", type=int, default=1)

    p = sub.add_parser("reproduce-figure", help="both pipelines at several levels")
    _common(p)
    p.add_argument("--c-list", dest="c_list", help="comma-separated levels (default 0.8,1,2)")
    p.add_argument("--no-semigroup", dest="semigroup", action="store_false")

    p = sub.add_parser("compare", help="sup-distances between pipelines or two CSV files")
    _common(p)
    p.add_argument("files", nargs="*")
    return ap


def _run(args, cfg):
    if args.command == "solve":
        res = run_solve(cfg)
        for name, rr in res.residuals.items():
            print(f"{name}: residual {rr.max_smooth_residual:.3e}, "
                  f"{len(rr.concave_kinks)} concave / {len(rr.convex_kinks)} convex kinks")
        print(f"sup distance u_minus - u_bar_minus: {res.distance:.6g}")
        if not res.converged:
            print("not converged within t-max", file=sys.stderr)
            return EXIT_UNCERTIFIED
        if not res.gate_ok:
            print(f"residual gate {cfg.gate:g} failed", file=sys.stderr)
            return EXIT_UNCERTIFIED
        return EXIT_OK
    if args.command == "critical":
        est = run_critical(cfg, args.c_lo, args.c_hi)
        for pr in est.probes:
            print(f"probe c={pr.c:+.6f} {pr.outcome} t={pr.t:.3f} horizon={pr.horizon:g}")
        line = " ".join(f"{k}={v}" for k, v in est.as_dict().items())
        print(line)
        out = artifacts.ensure_dir(cfg.out)
        with open(os.path.join(out, "critical.txt"), "w", newline="\n") as fh:
            fh.write(line + "\n")
        return EXIT_OK
    if args.command == "flow":
        if args.stride < 1:
            raise ConfigurationError("stride must be at least 1")
        path, drift = run_flow(cfg, args.x0, args.p0, args.u0, args.t_end, args.h, args.stride)
        print(f"wrote {path}; max |H - c| = {drift:.3e}")
        return EXIT_OK
    if args.command == "reproduce-figure":
        paths = run_reproduce_figure(cfg, parse_c_list(cfg.c_list), args.semigroup)
        for key in sorted(paths):
            print(paths[key])
        return EXIT_OK
    if args.command == "compare":
        res = run_compare(cfg, args.files)
        for k, v in res.items():
            print(f"{k}={v}")
        return EXIT_OK
    raise ConfigurationError(f"unknown command {args.command}")  # pragma: no cover


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return _run(args, cfg)
    except DivergenceError as exc:
        print(f"divergence: {exc} (level below the critical value?)", file=sys.stderr)
        return EXIT_DIVERGED
    except (ContactHJError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
