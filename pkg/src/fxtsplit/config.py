"""Experiment config: a YAML (or JSON) tree turned into solver objects.

Schema (all sections except ``problem`` and ``solver.lambda`` optional)::

    seed: 0
    problem:
      kind: inclusion | cop | mvi | vi
      dim: 2                        # inclusion only, when A/B don't fix it
      enforce_assumptions: false
      A: <operator>                 # inclusion
      B: <forward>                  # inclusion
      f: <function>  g: <function>  # cop
      F: <forward>   g: <function>  # mvi
      F: <forward>   C: <set>       # vi
    solver:
      lambda: 0.8
      sigma: 1.0
      gamma: 1.0e-3
      tol: 1.0e-9
      max_steps: 100000
      integrator: euler | rk4
      field: modified | nominal
      t_end: 20.0                   # rk4 only; default gamma * max_steps
      delta_floor: 1.0e-3           # 0 disables the floor
      scaling: {c1: 1, c2: 1, kappa1: 0.5, kappa2: 1.5}
      nu: 4                         # overrides scaling kappas
      xi: 2                         # optional
      coefficients: standard        # or direct: rate constants for the bounds
    initial_points:
      points: [[1, 0]]
      random: {count: 1, radii: [0.01, 1, 100]}   # x* + radius * unit vector
    outputs: {trace_path: trace.csv, report_path: report.json, record_iterates: false}
    sweep: {axis: gamma, values: [1e-3, 1e-2]}
    verify: {samples: 1000, lyapunov_dt: 1.0e-5}

``<set>``: ``{kind: box, lower, upper}``, ``{kind: ball, center, radius}``,
``{kind: halfspace, normal, offset}``, ``{kind: affine_subspace, matrix, rhs}``,
``{kind: whole_space, dim}``.
``<function>``: ``{kind: zero}``, ``{kind: l1_norm, weight}``,
``{kind: quadratic, Q, b}``, ``{kind: indicator, set: <set>}``, ``{kind: affine, c}``.
``<operator>`` (A): ``{kind: zero}``, ``{kind: scaled_identity, kappa}``,
``{kind: linear, G, h, mu}``, ``{kind: normal_cone, set: <set>}``,
``{kind: subdifferential, function: <function>}``.
``<forward>`` (B/F): ``{kind: identity}``, ``{kind: zero}``,
``{kind: linear, matrix, offset, mu, L, beta}``,
``{kind: gradient, function: <function>, mu, L, beta}``. Declared ``mu``/``L``
override the closed-form moduli.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from . import operators as ops
from .dynamics import SolverConfig
from .errors import InputError, InvalidSpecError
from .fb_core import ProblemInstance, ScalingParams
from .problems import CopSpec, MviSpec, ViSpec, to_inclusion
from .settling import kappa_from_nu

DEFAULT_SEED = 0


def load_config(path):
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        cfg = json.loads(text)
    else:
        cfg = yaml.safe_load(text)
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: config must be a mapping")
    return cfg


def _req(d, key, where):
    if key not in d:
        raise InputError(f"{where}: missing '{key}'")
    return d[key]


def build_set(d):
    kind = _req(d, "kind", "set")
    if kind == "box":
        return ops.ConvexSet.box(_req(d, "lower", "box"), _req(d, "upper", "box"))
    if kind == "ball":
        return ops.ConvexSet.ball(_req(d, "center", "ball"), _req(d, "radius", "ball"))
    if kind == "halfspace":
        return ops.ConvexSet.halfspace(_req(d, "normal", "halfspace"), _req(d, "offset", "halfspace"))
    if kind == "affine_subspace":
        return ops.ConvexSet.affine_subspace(_req(d, "matrix", "affine"), _req(d, "rhs", "affine"))
    if kind == "whole_space":
        return ops.ConvexSet.whole_space(_req(d, "dim", "whole_space"))
    raise InputError(f"unknown set kind {kind!r}")


def build_function(d, dim=None):
    kind = _req(d, "kind", "function")
    if kind == "zero":
        return ops.Function.zero(d.get("dim", dim))
    if kind == "l1_norm":
        return ops.Function.l1_norm(d.get("weight", 1.0), d.get("dim", dim))
    if kind == "quadratic":
        return ops.Function.quadratic(_req(d, "Q", "quadratic"), d.get("b"))
    if kind == "indicator":
        return ops.Function.indicator(build_set(_req(d, "set", "indicator")))
    if kind == "affine":
        return ops.Function.affine(_req(d, "c", "affine"))
    raise InputError(f"unknown function kind {kind!r}")


def build_maximal(d, dim):
    kind = _req(d, "kind", "A")
    if kind == "zero":
        return ops.zero_operator(d.get("dim", dim))
    if kind == "scaled_identity":
        return ops.scaled_identity(_req(d, "kappa", "scaled_identity"), d.get("dim", dim))
    if kind == "linear":
        return ops.linear_operator(_req(d, "G", "linear A"), d.get("h"), d.get("mu"))
    if kind == "normal_cone":
        return ops.normal_cone(build_set(_req(d, "set", "normal_cone")))
    if kind == "subdifferential":
        return ops.subdifferential(build_function(_req(d, "function", "subdifferential"), dim), dim)
    raise InputError(f"unknown operator kind {kind!r}")


def build_forward(d, dim):
    kind = _req(d, "kind", "B")
    mu, L, beta = d.get("mu"), d.get("L"), d.get("beta")
    if kind == "identity":
        n = d.get("dim", dim)
        return ops.linear_forward(np.eye(n), mu=mu, L=L, beta=beta, name="Id")
    if kind == "zero":
        n = d.get("dim", dim)
        return ops.linear_forward(np.zeros((n, n)), mu=0.0 if mu is None else mu,
                                  L=0.0 if L is None else L, beta=beta, name="zero")
    if kind == "linear":
        return ops.linear_forward(_req(d, "matrix", "linear B"), d.get("offset"), mu, L, beta)
    if kind == "gradient":
        return ops.gradient_forward(build_function(_req(d, "function", "gradient"), dim),
                                    mu, L, beta)
    raise InputError(f"unknown forward-operator kind {kind!r}")


@dataclass
class Problem:
    instance: ProblemInstance
    spec: Optional[object] = None
    warnings: List[str] = field(default_factory=list)


def _infer_dim(d):
    if "dim" in d:
        return int(d["dim"])
    for key in ("B", "F", "A", "f", "C"):
        sub = d.get(key)
        if not isinstance(sub, dict):
            continue
        for mkey in ("matrix", "Q", "G"):
            if mkey in sub:
                return len(sub[mkey])
        for vkey in ("lower", "center", "normal", "c", "b"):
            if vkey in sub:
                return len(sub[vkey])
        for nested in ("set", "function"):
            if isinstance(sub.get(nested), dict):
                inner = _infer_dim({key: sub[nested]})
                if inner:
                    return inner
    return None


def build_problem(d, lam=None):
    kind = _req(d, "kind", "problem")
    dim = _infer_dim(d)
    enforce = bool(d.get("enforce_assumptions", False))
    if kind == "inclusion":
        if dim is None:
            raise InputError("problem: cannot infer dimension; set 'dim'")
        A = build_maximal(_req(d, "A", "problem"), dim)
        B = build_forward(_req(d, "B", "problem"), dim)
        return Problem(ProblemInstance(A, B, dim, "inclusion"))
    if kind == "cop":
        spec = CopSpec(build_function(_req(d, "f", "cop"), dim), build_function(_req(d, "g", "cop"), dim))
    elif kind == "mvi":
        spec = MviSpec(build_forward(_req(d, "F", "mvi"), dim), build_function(_req(d, "g", "mvi"), dim))
    elif kind == "vi":
        spec = ViSpec(build_forward(_req(d, "F", "vi"), dim), build_set(_req(d, "C", "vi")))
    else:
        raise InputError(f"unknown problem kind {kind!r}")
    adapted = to_inclusion(spec, lam=lam, enforce=enforce)
    return Problem(adapted.instance, spec, list(adapted.warnings))


@dataclass
class RunSettings:
    solver: SolverConfig
    field: str = "modified"
    t_end: Optional[float] = None
    nu: Optional[float] = None
    xi: Optional[float] = None
    delta_floor: Optional[float] = 1e-3
    coefficients: str = "standard"

    @property
    def horizon(self):
        return self.t_end if self.t_end is not None else self.solver.gamma * self.solver.max_steps


def build_solver(d, record_iterates=False):
    lam = float(_req(d, "lambda", "solver"))
    nu = d.get("nu")
    sc = dict(d.get("scaling") or {})
    if nu is not None:
        sc["kappa1"], sc["kappa2"] = kappa_from_nu(float(nu))
    scaling = ScalingParams(**{k: float(v) for k, v in sc.items()})
    floor = d.get("delta_floor", 1e-3)
    floor = None if floor in (None, 0, 0.0, False) else float(floor)
    field_name = d.get("field", "modified")
    if field_name not in ("modified", "nominal"):
        raise InputError(f"solver.field must be 'modified' or 'nominal', got {field_name!r}")
    cfg = SolverConfig(
        lam=lam,
        sigma=float(d.get("sigma", 1.0)),
        scaling=scaling,
        gamma=float(d.get("gamma", 1e-3)),
        tol=float(d.get("tol", 1e-9)),
        max_steps=int(d.get("max_steps", 100_000)),
        integrator=d.get("integrator", "euler"),
        record_iterates=bool(record_iterates),
        delta_floor=floor if floor is not None else 1e-3,
    )
    coefficients = d.get("coefficients", "standard")
    if coefficients not in ("standard", "direct"):
        raise InputError(f"solver.coefficients must be 'standard' or 'direct', got {coefficients!r}")
    t_end = d.get("t_end")
    return RunSettings(cfg, field_name, None if t_end is None else float(t_end),
                       None if nu is None else float(nu),
                       None if d.get("xi") is None else float(d["xi"]), floor, coefficients)


def initial_points(d, x_star, rng):
    """Explicit points, then ``x* + radius * u`` for each radius and random unit ``u``."""
    d = d or {}
    n = x_star.shape[0]
    pts = [ops.as_vector(p, n, name="initial point") for p in d.get("points", [])]
    rnd = d.get("random")
    if rnd:
        count = int(rnd.get("count", 1))
        radii = [float(r) for r in rnd.get("radii", [1.0])]
        if any(not r > 0 for r in radii):
            raise InputError("initial_points.random.radii must be positive")
        for r in radii:
            for _ in range(count):
                u = rng.standard_normal(n)
                pts.append(x_star + r * u / np.linalg.norm(u))
    if not pts:
        u = rng.standard_normal(n)
        pts.append(x_star + u / np.linalg.norm(u))
    return pts
