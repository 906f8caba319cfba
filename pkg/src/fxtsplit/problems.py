"""COP / MVI / VI adapters onto the inclusion ``0 in A(x) + B(x)``.

* COP ``min f + g``: ``A = dg`` (resolvent ``prox_{lam g}``), ``B = grad f``.
* MVI with ``F, g``: ``A = dg``, ``B = F``.
* VI on ``C``: ``A = N_C`` (resolvent ``P_C``), ``B = F``.

The per-application windows ``lam in (0, 2 mu / L^2)`` are checked against
``lam`` when one is given. With ``enforce=False`` (the default) violations
are returned as warnings on the adapted problem instead of raised.
"""

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import AssumptionError, InvalidSpecError
from .fb_core import ProblemInstance, fb_map
from .operators import (
    ConvexSet,
    ForwardOperator,
    Function,
    evaluate_forward,
    gradient_forward,
    moduli_of,
    normal_cone,
    subdifferential,
)


@dataclass(frozen=True, eq=False)
class CopSpec:
    f: Function
    g: Function


@dataclass(frozen=True, eq=False)
class MviSpec:
    F: ForwardOperator
    g: Function


@dataclass(frozen=True, eq=False)
class ViSpec:
    F: ForwardOperator
    C: ConvexSet


@dataclass(frozen=True, eq=False)
class Adapted:
    """An adapted instance plus whatever assumption warnings were raised."""

    instance: ProblemInstance
    spec: object
    warnings: List[str] = field(default_factory=list)


def _strong_window(mu, L, lam, label, enforce, notes):
    msgs = []
    if not mu > 0:
        msgs.append(f"{label}: modulus mu={mu} is not strongly monotone (mu > 0 required)")
    if not L > 0:
        msgs.append(f"{label}: Lipschitz constant L={L} must be positive")
    if lam is not None and mu > 0 and L > 0 and not (0 < lam < 2 * mu / L**2):
        msgs.append(f"{label}: lambda={lam} outside (0, 2 mu/L^2) = (0, {2 * mu / L**2:.6g})")
    if msgs and enforce:
        raise AssumptionError("; ".join(msgs))
    for m in msgs:
        warnings.warn(m, RuntimeWarning, stacklevel=3)
    notes.extend(msgs)


def _dim_of(*objs):
    dims = {o.dim for o in objs if getattr(o, "dim", None) is not None}
    if len(dims) != 1:
        raise InvalidSpecError(f"cannot infer a single dimension from {sorted(dims)}")
    return dims.pop()


def cop_to_inclusion(spec, lam=None, enforce=False):
    if not spec.f.differentiable:
        raise InvalidSpecError(f"smooth part must be differentiable, got {spec.f.kind}")
    n = _dim_of(spec.f, spec.g)
    f = spec.f if spec.f.dim is not None else Function.zero(n)
    B = gradient_forward(f)
    notes = []
    m = moduli_of(f)
    _strong_window(m.mu, m.L, lam, "COP", enforce, notes)
    P = ProblemInstance(subdifferential(spec.g, n), B, n, "cop")
    return Adapted(P, spec, notes)


def mvi_to_inclusion(spec, lam=None, enforce=False):
    n = _dim_of(spec.F, spec.g)
    notes = []
    _strong_window(spec.F.mu, spec.F.L, lam, "MVI", enforce, notes)
    P = ProblemInstance(subdifferential(spec.g, n), spec.F, n, "mvi")
    return Adapted(P, spec, notes)


def vi_to_inclusion(spec, lam=None, enforce=False):
    n = _dim_of(spec.F, spec.C)
    notes = []
    _strong_window(spec.F.mu, spec.F.L, lam, "VI", enforce, notes)
    P = ProblemInstance(normal_cone(spec.C), spec.F, n, "vi")
    return Adapted(P, spec, notes)


def to_inclusion(spec, lam=None, enforce=False):
    if isinstance(spec, CopSpec):
        return cop_to_inclusion(spec, lam, enforce)
    if isinstance(spec, MviSpec):
        return mvi_to_inclusion(spec, lam, enforce)
    if isinstance(spec, ViSpec):
        return vi_to_inclusion(spec, lam, enforce)
    raise InvalidSpecError(f"unknown problem spec {type(spec).__name__}")


def closed_form_map(spec, lam, x):
    """The application's own fixed-point map, written without the adapter."""
    if isinstance(spec, CopSpec):
        return spec.g.prox(lam, x - lam * spec.f.gradient(x))
    if isinstance(spec, MviSpec):
        return spec.g.prox(lam, x - lam * evaluate_forward(spec.F, x))
    if isinstance(spec, ViSpec):
        return spec.C.project(x - lam * evaluate_forward(spec.F, x))
    raise InvalidSpecError(f"unknown problem spec {type(spec).__name__}")


@dataclass(frozen=True)
class ParityReport:
    samples: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self):
        return self.max_deviation <= self.tolerance


def residual_parity_check(spec, lam, samples=1000, rng=None, scale=3.0, tolerance=1e-12):
    """Compare the adapter's ``fb_map`` with :func:`closed_form_map` on random points."""
    rng = np.random.default_rng(rng)
    P = to_inclusion(spec, enforce=False).instance
    worst = 0.0
    for _ in range(int(samples)):
        x = scale * rng.standard_normal(P.dim)
        dev = np.linalg.norm(fb_map(P, lam, x) - closed_form_map(spec, lam, x))
        worst = max(worst, float(dev))
    return ParityReport(int(samples), worst, tolerance)


def sample_feasible(C, count, rng=None, anchor=None, radius=3.0):
    """Points of ``C``: rejection sampling in its bounding box, projection as fallback."""
    rng = np.random.default_rng(rng)
    bb = C.bounding_box()
    if bb is None:
        center = np.zeros(C.dim) if anchor is None else np.asarray(anchor, dtype=float)
        lo, hi = center - radius, center + radius
    else:
        lo, hi = bb
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count:
        z = rng.uniform(lo, hi)
        tries += 1
        if C.contains(z):
            out.append(z)
    while len(out) < count:
        out.append(C.project(rng.uniform(lo, hi)))
    return np.array(out)


def optimality_violation(spec, x_star, lam, samples=1000, rng=None, radius=3.0):
    """Largest violation of the source problem's own optimality condition at ``x_star``.

    COP: ``|x - prox_{lam g}(x - lam grad f(x))|``. VI: ``max(0, -<F(x*), y - x*>)``
    over feasible ``y``. MVI: ``max(0, <F(x*), x* - y> + g(x*) - g(y))`` over
    random ``y``.
    """
    rng = np.random.default_rng(rng)
    x_star = np.asarray(x_star, dtype=float)
    if isinstance(spec, CopSpec):
        return float(np.linalg.norm(x_star - closed_form_map(spec, lam, x_star)))
    if isinstance(spec, ViSpec):
        Fx = evaluate_forward(spec.F, x_star)
        ys = sample_feasible(spec.C, samples, rng, anchor=x_star, radius=radius)
        return float(max(0.0, -np.min((ys - x_star) @ Fx)))
    if isinstance(spec, MviSpec):
        Fx = evaluate_forward(spec.F, x_star)
        gx = spec.g.value(x_star)
        if spec.g.kind == "indicator":
            ys = sample_feasible(spec.g.set, samples, rng, anchor=x_star, radius=radius)
        else:
            ys = x_star + radius * rng.standard_normal((samples, x_star.size))
        worst = 0.0
        for y in ys:
            worst = max(worst, float(Fx @ (x_star - y) + gx - spec.g.value(y)))
        return worst
    raise InvalidSpecError(f"unknown problem spec {type(spec).__name__}")
