"""Invariant checks run against one configured instance.

Each check returns a :class:`Check` with the largest observed violation and
the tolerance it is judged against. Violations are normalized so that a
passing check has ``max_violation <= tolerance``.
"""

from dataclasses import dataclass

import numpy as np

from . import dynamics as dyn
from .errors import FxtError
from .fb_core import fb_map, modified_field, nominal_field, phi_from_norm, residual
from .feasibility import (
    check_assumption_A,
    contraction_factor,
    feasible_interval,
    working_delta,
)
from .operators import evaluate_forward, resolvent
from .problems import optimality_violation, residual_parity_check
from .settling import build_bound


@dataclass
class Check:
    name: str
    samples: int
    max_violation: float
    tolerance: float
    note: str = ""

    @property
    def passed(self):
        return bool(np.isfinite(self.max_violation) and self.max_violation <= self.tolerance)

    def as_json(self):
        return {
            "name": self.name,
            "samples": self.samples,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "note": self.note,
        }


@dataclass
class VerifyReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def as_json(self):
        return {"pass": self.passed, "checks": [c.as_json() for c in self.checks]}


def delta_for(P, lam, delta_floor):
    tau = contraction_factor(P.mu_A, P.mu_B, P.L, lam)
    return tau if delta_floor is None else working_delta(tau, delta_floor)


def _pairs(rng, n, count, scale):
    return scale * rng.standard_normal((count, n)), scale * rng.standard_normal((count, n))


def check_resolvent(P, lam, rng, samples, scale=2.0):
    c = 1.0 + lam * P.mu_A
    xs, ys = _pairs(rng, P.dim, samples, scale)
    worst = 0.0
    for x, y in zip(xs, ys):
        dj = resolvent(P.A, lam, x) - resolvent(P.A, lam, y)
        d = x - y
        worst = max(worst, (c * (dj @ dj) - dj @ d) / max(1.0, d @ d))
    return Check("resolvent_cocoercivity", samples, float(worst), 1e-10)


def check_forward(P, rng, samples, scale=2.0):
    xs, ys = _pairs(rng, P.dim, samples, scale)
    mono, lip = 0.0, 0.0
    for x, y in zip(xs, ys):
        db = evaluate_forward(P.B, x) - evaluate_forward(P.B, y)
        d = x - y
        nd = np.sqrt(d @ d)
        mono = max(mono, (P.mu_B * (d @ d) - db @ d) / max(1.0, d @ d))
        lip = max(lip, (np.linalg.norm(db) - P.L * nd) / max(1.0, nd))
    return [
        Check("forward_monotonicity", samples, float(mono), 1e-10),
        Check("forward_lipschitz", samples, float(lip), 1e-10),
    ]


def check_contraction(P, lam, tau, rng, samples, scale=2.0):
    xs, ys = _pairs(rng, P.dim, samples, scale)
    worst = 0.0
    for x, y in zip(xs, ys):
        d = np.linalg.norm(x - y)
        ratio = np.linalg.norm(fb_map(P, lam, x) - fb_map(P, lam, y)) / d
        worst = max(worst, ratio - tau * (1 + 1e-8))
    return Check("empirical_contraction", samples, float(max(worst, 0.0)), 0.0,
                 f"tau={tau:.12g}")


def check_interval(P, rng, samples):
    iv = feasible_interval(P.mu_A, P.mu_B, P.L)
    hi = iv.hi if np.isfinite(iv.hi) else 10.0 * max(1.0, iv.lo)
    span = hi * 2.0
    lams = rng.uniform(0.0, span, samples)
    lams = lams[lams > 0]
    bad = sum(1 for lam in lams if check_assumption_A(P.mu_A, P.mu_B, P.L, lam) != (lam in iv))
    return Check("interval_correctness", len(lams), float(bad), 0.0, f"interval={iv.as_json()}")


def check_solution_geometry(P, lam, delta, x_star, sp, rng, samples, scale=2.0):
    """Acute angle, residual sandwich and equilibrium equivalence around x*."""
    acute, sandwich, equil = 0.0, 0.0, 0.0
    for k in range(samples):
        x = x_star + scale * rng.standard_normal(P.dim) * 10.0 ** rng.uniform(-3, 1)
        d = x - x_star
        nd = np.linalg.norm(d)
        r = residual(P, lam, x)
        nr = np.linalg.norm(r)
        acute = max(acute, ((1 - delta) * nd**2 - d @ r) / max(1.0, nd**2))
        sandwich = max(sandwich, ((1 - delta) * nd - nr) / max(1.0, nd),
                       (nr - (1 + delta) * nd) / max(1.0, nd))
        # away from x*, all three characterizations must agree that x is not an equilibrium
        zero_mod = not np.any(modified_field(P, sp, lam, x))
        zero_nom = not np.any(nominal_field(P, 1.0, lam, x))
        if zero_mod or zero_nom:
            equil += 1
    # x* is only certified to a small residual, so judge it at that scale
    tol = 1e-12 * (1 + np.linalg.norm(x_star))
    at_star = (np.linalg.norm(modified_field(P, sp, lam, x_star)) > phi_from_norm(tol, sp) * tol
               or np.linalg.norm(nominal_field(P, 1.0, lam, x_star)) > tol)
    return [
        Check("acute_angle", samples, float(max(acute, 0.0)), 1e-8),
        Check("residual_sandwich", samples, float(max(sandwich, 0.0)), 1e-8),
        Check("equilibrium_equivalence", samples + 1, float(equil + at_star), 0.0),
    ]


def lyapunov_fd_violation(trace, bound, v_floor=1e-16):
    """Worst ``(Vdot_fd + p1 V^a1 + p2 V^a2) / (1 + |Vdot_fd|)`` along a trace."""
    V = trace.lyapunov
    dt = trace.time[1] - trace.time[0] if len(trace) > 1 else 1.0
    worst = -np.inf
    for k in range(len(V) - 1):
        if not V[k] > v_floor:
            continue
        vdot = (V[k + 1] - V[k]) / dt
        rhs = -(bound.p1 * V[k] ** bound.alpha1 + bound.p2 * V[k] ** bound.alpha2)
        worst = max(worst, (vdot - rhs) / (1.0 + abs(vdot)))
    return worst if np.isfinite(worst) else 0.0


def run_checks(problem, settings, points, x_star, rng, samples=1000, lyapunov_dt=1e-5,
               backend=None):
    P, cfg = problem.instance, settings.solver
    lam, sp = cfg.lam, settings.solver.scaling
    checks = []
    checks.append(check_resolvent(P, lam, rng, samples))
    checks.extend(check_forward(P, rng, samples))
    checks.append(check_interval(P, rng, samples))
    tau = contraction_factor(P.mu_A, P.mu_B, P.L, lam)
    checks.append(check_contraction(P, lam, tau, rng, samples))
    delta = delta_for(P, lam, settings.delta_floor)
    checks.extend(check_solution_geometry(P, lam, delta, x_star, sp, rng, samples))

    cert_res = np.linalg.norm(residual(P, lam, x_star))
    checks.append(Check("certificate_residual", 1, float(cert_res),
                        1e-12 * (1 + np.linalg.norm(x_star))))

    if problem.spec is not None:
        par = residual_parity_check(problem.spec, lam, samples=samples, rng=rng)
        checks.append(Check("adapter_parity", par.samples, par.max_deviation, par.tolerance))
        opt = optimality_violation(problem.spec, x_star, lam, samples=samples, rng=rng)
        checks.append(Check("source_optimality", samples, opt, 1e-8))

    try:
        bound = build_bound(delta, sp, nu=settings.nu, xi=settings.xi,
                            coefficients=settings.coefficients)
        direct = build_bound(delta, sp, nu=settings.nu, coefficients="direct")
    except (FxtError, ValueError) as exc:
        checks.append(Check("settling_bound_window", 1, float("inf"), 0.0, str(exc)))
        return VerifyReport(checks)
    checks.append(Check("settling_bound_window", 1, 0.0, 0.0,
                        f"t_max_general={bound.t_max_general:.6g}"))

    fine = cfg.with_(gamma=lyapunov_dt, integrator="rk4")
    horizon = 1.5 * bound.t_max_general
    lyap_worst, direct_worst, cap_worst = -np.inf, -np.inf, -np.inf
    traces = []
    for x0 in points:
        tr = dyn.integrate_continuous(P, fine, "modified", x0, horizon, x_star=x_star,
                                      check=False, backend=backend)
        traces.append(tr)
        lyap_worst = max(lyap_worst, lyapunov_fd_violation(tr, bound))
        direct_worst = max(direct_worst, lyapunov_fd_violation(tr, direct))
        ts = dyn.empirical_settling_time(tr, cfg.tol, column="residual_norm")
        over = np.inf if ts is None else ts - bound.t_max_general
        cap_worst = max(cap_worst, over)
    checks.append(Check("lyapunov_decrease", len(points), float(max(lyap_worst, 0.0)), 1e-3,
                        f"dt={lyapunov_dt} coefficients={settings.coefficients}"))
    checks.append(Check("lyapunov_decrease_direct", len(points), float(max(direct_worst, 0.0)),
                        1e-3, f"dt={lyapunov_dt}"))
    checks.append(Check("settling_time_cap", len(points), float(max(cap_worst, 0.0)), 0.0,
                        f"t_max={bound.t_max_general:.6g}"))

    again = dyn.integrate_continuous(P, fine, "modified", points[0], horizon, x_star=x_star,
                                     check=False, backend=backend)
    same = (again.residual_norm.tobytes() == traces[0].residual_norm.tobytes()
            and again.x_final.tobytes() == traces[0].x_final.tobytes())
    checks.append(Check("determinism", 2, 0.0 if same else 1.0, 0.0))
    return VerifyReport(checks)
