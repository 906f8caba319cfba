"""Command line: ``fxtsplit {solve,sweep,verify,feasibility,bounds} --config FILE``.

Exit codes: 0 success, 1 bad config, 2 infeasible parameters, 3 divergence,
4 invariant failure.
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import dynamics as dyn
from .config import (
    DEFAULT_SEED,
    build_problem,
    build_solver,
    initial_points,
    load_config,
)
from .errors import FxtError, InputError, InvalidSpecError, NonConvergenceError, WindowError
from .feasibility import (
    INFEASIBLE,
    check_assumption_A,
    epsilon_of_delta,
    report,
    scan_lambda,
)
from .fb_core import ScalingParams
from .settling import build_bound
from .verify import delta_for, run_checks

log = logging.getLogger("fxtsplit")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_DIVERGED, EXIT_INVARIANT = 0, 1, 2, 3, 4


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_json(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


class Context:
    """Everything a subcommand needs, built once from the config file."""

    def __init__(self, args):
        self.cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else self.cfg.get("seed", DEFAULT_SEED)
        self.seed = int(seed)
        self.override = args.override_feasibility
        self.out = Path(args.out or self.cfg.get("outputs", {}).get("dir", "."))
        outputs = self.cfg.get("outputs") or {}
        self.trace_path = outputs.get("trace_path", "trace.csv")
        self.report_path = outputs.get("report_path", "report.json")
        self.settings = build_solver(_section(self.cfg, "solver"),
                                     record_iterates=outputs.get("record_iterates", False))
        self.problem = build_problem(_section(self.cfg, "problem"), lam=self.settings.solver.lam)
        self.rng = np.random.default_rng(self.seed)

    @property
    def P(self):
        return self.problem.instance

    @property
    def lam(self):
        return self.settings.solver.lam

    def feasibility(self):
        P = self.P
        floor = self.settings.delta_floor
        rep = report(P.mu_A, P.mu_B, P.L, self.lam, floor if floor is not None else 1e-3)
        if floor is None and rep.tau is not None:
            # no floor: delta is tau itself, eps undefined when tau == 0
            rep_dict = rep.as_json()
            rep_dict["delta"] = rep.tau
            if rep.tau > 0:
                eps = epsilon_of_delta(rep.tau)
                rep_dict["epsilon_delta"] = eps
                rep_dict["kappa1_window"] = [max(0.0, 1 - eps), 1.0]
            else:
                rep_dict["epsilon_delta"] = None
                rep_dict["kappa1_window"] = None
            return rep, rep_dict
        return rep, rep.as_json()

    def admissible(self):
        P = self.P
        return check_assumption_A(P.mu_A, P.mu_B, P.L, self.lam)

    def bound(self, delta, settings=None):
        return _bound(delta, settings or self.settings)

    def resolve(self, name):
        p = Path(name)
        return p if p.is_absolute() else self.out / p


def _bound(delta, s):
    return build_bound(delta, s.solver.scaling, nu=s.nu, xi=s.xi,
                       gamma=s.solver.gamma if s.nu is not None else None,
                       coefficients=s.coefficients)


def _section(cfg, key):
    sec = cfg.get(key)
    if not isinstance(sec, dict):
        raise InputError(f"config: missing section '{key}'")
    return sec


def _gate(ctx):
    """Return an exit code if the feasibility gate stops the run, else None."""
    if ctx.admissible() or ctx.override:
        return None
    _, rep = ctx.feasibility()
    payload = {"error": "lambda violates Assumption (A)", "feasibility": rep}
    _write_json(ctx.resolve(ctx.report_path), payload)
    print(json.dumps(_jsonable(payload)), file=sys.stderr)
    return EXIT_INFEASIBLE


def _run_one(P, settings, x0, x_star, backend=None):
    cfg = settings.solver
    check = False  # the gate already ran (or was overridden)
    if cfg.integrator == "rk4":
        return dyn.integrate_continuous(P, cfg, settings.field, x0, settings.horizon,
                                        x_star=x_star, check=check, backend=backend)
    if settings.field == "nominal":
        return dyn.euler_nominal(P, cfg.sigma, cfg.gamma, cfg.lam, x0, tol=cfg.tol,
                                 max_steps=cfg.max_steps, x_star=x_star,
                                 record_iterates=cfg.record_iterates, check=check,
                                 backend=backend)
    return dyn.euler_modified(P, cfg, x0, x_star=x_star, check=check, backend=backend)


def _settling(trace, tol):
    return dyn.empirical_settling_time(trace, tol, column="residual_norm")


def _bound_fields(delta, settings):
    if delta is None or not delta > 0:
        return {"t_max_general": None, "t_max_pi": None, "n_star": None,
                "bound_error": "no admissible delta"}
    try:
        b = _bound(delta, settings)
    except (FxtError, ValueError) as exc:
        return {"t_max_general": None, "t_max_pi": None, "n_star": None, "bound_error": str(exc)}
    return {"t_max_general": b.t_max_general, "t_max_pi": b.t_max_pi, "n_star": b.n_star,
            "bound_error": ""}


def _trace_name(base, i, count):
    if count == 1:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}_{i}{p.suffix}"))


def cmd_solve(ctx):
    code = _gate(ctx)
    if code is not None:
        return code
    P, s = ctx.P, ctx.settings
    cert = dyn.certify(P, ctx.lam, np.zeros(P.dim))
    delta = delta_for(P, ctx.lam, s.delta_floor) if ctx.admissible() else None
    bound = _bound_fields(delta, s)
    points = initial_points(ctx.cfg.get("initial_points"), cert.x_star, ctx.rng)
    runs = []
    diverged = False
    for i, x0 in enumerate(points):
        tr = _run_one(P, s, x0, cert.x_star)
        path = ctx.resolve(_trace_name(ctx.trace_path, i, len(points)))
        path.parent.mkdir(parents=True, exist_ok=True)
        tr.to_csv(path)
        diverged |= tr.terminal_status == "diverged"
        runs.append({
            "x0": x0,
            "status": tr.terminal_status,
            "steps": tr.steps,
            "final_residual": tr.residual_norm[-1],
            "empirical_settling_time": _settling(tr, s.solver.tol),
            "trace_path": str(path),
        })
        log.info("run %d: %s after %d steps", i, tr.terminal_status, tr.steps)
    settle = [r["empirical_settling_time"] for r in runs]
    summary = {
        "x_star": cert.x_star,
        "residual": cert.residual_norm,
        "empirical_settling_time": None if any(t is None for t in settle) else max(settle),
        **bound,
        "warnings": ctx.problem.warnings,
        "runs": runs,
    }
    _write_json(ctx.resolve(ctx.report_path), summary)
    return EXIT_DIVERGED if diverged else EXIT_OK


SWEEP_COLUMNS = ("axis", "value", "point", "status", "steps", "empirical_settling_time",
                 "t_max_general", "t_max_pi", "n_star", "note")


def _sweep_values(axis, values):
    if axis not in ("gamma", "lambda", "kappa", "radius"):
        raise InputError(f"sweep axis must be gamma, lambda, kappa or radius, got {axis!r}")
    if not values:
        raise InputError("sweep needs values")
    values = [float(v) for v in values]
    if any(not math.isfinite(v) for v in values):
        raise InputError("sweep values must be finite")
    if axis in ("gamma", "lambda", "radius") and any(v <= 0 for v in values):
        raise InputError(f"sweep values for {axis} must be positive")
    return values


def cmd_sweep(ctx, axis=None, values=None):
    """One row per (axis value, initial point); failures land in the status column."""
    sweep = ctx.cfg.get("sweep") or {}
    axis = axis or sweep.get("axis")
    values = _sweep_values(axis, values if values is not None else sweep.get("values"))
    P, base = ctx.P, ctx.settings
    if axis != "lambda":
        code = _gate(ctx)
        if code is not None:
            return code
        x_star = dyn.certify(P, ctx.lam, np.zeros(P.dim)).x_star
        pts = initial_points(ctx.cfg.get("initial_points"), x_star, ctx.rng)
        direction = ctx.rng.standard_normal(P.dim)
        direction /= np.linalg.norm(direction)

    rows = []
    for v in values:
        lam, settings = ctx.lam, base
        if axis == "gamma":
            settings = _with_solver(base, gamma=v)
        elif axis == "lambda":
            lam, settings = v, _with_solver(base, lam=v)
        elif axis == "kappa":
            sc = base.solver.scaling
            try:
                settings = _with_solver(base, scaling=ScalingParams(sc.c1, sc.c2, v, sc.kappa2))
            except (FxtError, ValueError) as exc:
                rows.append(_row(axis, v, 0, "rejected", None, None, {}, str(exc)))
                continue
            settings = replace(settings, nu=None)

        admissible = check_assumption_A(P.mu_A, P.mu_B, P.L, lam)
        if axis == "lambda":
            if not admissible and not ctx.override:
                rows.append(_row(axis, v, 0, "infeasible", None, None, {}, "Assumption (A) fails"))
                continue
            try:
                x_star = dyn.certify(P, lam, np.zeros(P.dim)).x_star
            except FxtError as exc:
                rows.append(_row(axis, v, 0, "error", None, None, {}, str(exc)))
                continue
            run_pts = initial_points(ctx.cfg.get("initial_points"), x_star,
                                     np.random.default_rng(ctx.seed))
        elif axis == "radius":
            run_pts = [x_star + v * direction]
        else:
            run_pts = pts

        delta = delta_for(P, lam, base.delta_floor) if admissible else None
        bound = _bound_fields(delta, settings)
        for i, x0 in enumerate(run_pts):
            try:
                tr = _run_one(P, settings, x0, x_star)
            except FxtError as exc:
                rows.append(_row(axis, v, i, "error", None, None, bound, str(exc)))
                continue
            rows.append(_row(axis, v, i, tr.terminal_status, tr.steps,
                             _settling(tr, settings.solver.tol), bound, bound["bound_error"]))

    path = ctx.resolve(sweep.get("path", "sweep.csv"))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_cell(r[c]) for c in SWEEP_COLUMNS])
    log.info("wrote %d sweep rows to %s", len(rows), path)
    return EXIT_OK


def _cell(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _with_solver(settings, **changes):
    return replace(settings, solver=settings.solver.with_(**changes))


def _row(axis, value, point, status, steps, settle, bound, note):
    return {
        "axis": axis, "value": value, "point": point, "status": status, "steps": steps,
        "empirical_settling_time": settle,
        "t_max_general": bound.get("t_max_general"),
        "t_max_pi": bound.get("t_max_pi"),
        "n_star": bound.get("n_star"),
        "note": note,
    }


def cmd_verify(ctx):
    code = _gate(ctx)
    if code is not None:
        return code
    P = ctx.P
    vcfg = ctx.cfg.get("verify") or {}
    cert = dyn.certify(P, ctx.lam, np.zeros(P.dim))
    points = initial_points(ctx.cfg.get("initial_points"), cert.x_star, ctx.rng)
    rep = run_checks(ctx.problem, ctx.settings, points, cert.x_star, ctx.rng,
                     samples=int(vcfg.get("samples", 1000)),
                     lyapunov_dt=float(vcfg.get("lyapunov_dt", 1e-5)))
    payload = rep.as_json()
    _write_json(ctx.resolve(vcfg.get("path", "verify.json")), payload)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<26} "
              f"max_violation={c.max_violation:.3e} tol={c.tolerance:.1e} {c.note}")
    return EXIT_OK if rep.passed else EXIT_INVARIANT


def cmd_feasibility(ctx):
    P = ctx.P
    rep, payload = ctx.feasibility()
    if rep.branch != INFEASIBLE:
        best = scan_lambda(P.mu_A, P.mu_B, P.L)
        payload["lambda_scan"] = None if best is None else {"lambda": best[0], "tau": best[1]}
    _write_json(ctx.resolve("feasibility.json"), payload)
    print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    return EXIT_OK if rep.branch != INFEASIBLE and rep.tau is not None else EXIT_INFEASIBLE


def cmd_bounds(ctx):
    P = ctx.P
    if not ctx.admissible():
        # the bound formulas need Assumption (A); overriding cannot help here
        _, rep = ctx.feasibility()
        print(json.dumps(_jsonable({"error": "lambda violates Assumption (A)",
                                    "feasibility": rep})), file=sys.stderr)
        return EXIT_INFEASIBLE
    delta = delta_for(P, ctx.lam, ctx.settings.delta_floor)
    try:
        b = ctx.bound(delta)
    except (WindowError, InputError) as exc:
        payload = {"error": str(exc), "delta": delta,
                   "window": getattr(exc, "window", None)}
        _write_json(ctx.resolve("bounds.json"), payload)
        print(json.dumps(_jsonable(payload)), file=sys.stderr)
        return EXIT_INFEASIBLE
    payload = b.as_json()
    _write_json(ctx.resolve("bounds.json"), payload)
    print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="fxtsplit", description="Fixed-time forward-backward splitting experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep", "verify", "feasibility", "bounds"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML or JSON experiment config")
        sp.add_argument("--override-feasibility", action="store_true",
                        help="run even when lambda violates Assumption (A)")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--out", default=None, help="output directory (default: .)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            sp.add_argument("--axis", choices=("gamma", "lambda", "kappa", "radius"))
            sp.add_argument("--values", help="comma-separated axis values")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be a non-negative integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        ctx = Context(args)
        if args.command == "solve":
            return cmd_solve(ctx)
        if args.command == "sweep":
            values = None if args.values is None else [float(v) for v in args.values.split(",")]
            return cmd_sweep(ctx, args.axis, values)
        if args.command == "verify":
            return cmd_verify(ctx)
        if args.command == "feasibility":
            return cmd_feasibility(ctx)
        return cmd_bounds(ctx)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InputError, InvalidSpecError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FxtError as exc:
        # assumption, window and ill-posed parameter errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
