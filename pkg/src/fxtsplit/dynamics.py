"""Time stepping for the nominal and modified forward-backward systems.

Every solver routes to the numba kernels when the instance is packable and
the backend is ``numba``; otherwise it runs the same recursion here in numpy
against the operator oracles.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from ._accel import resolve_backend
from .errors import IllPosedParameterError, InputError, NonConvergenceError
from .fb_core import RESIDUAL_GUARD, ScalingParams, fb_map, phi_from_norm
from .feasibility import check_assumption_A, contraction_factor, working_delta
from .operators import as_vector

CSV_COLUMNS = ("step", "time", "residual_norm", "lyapunov", "phi", "distance_to_solution")

# relative residual used when a run certifies x* on its own
CERT_REL_TOL = 1e-13
DIVERGE_FACTOR = 1e12


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    sigma: float = 1.0
    scaling: ScalingParams = field(default_factory=ScalingParams)
    gamma: float = 1e-3
    tol: float = 1e-9
    max_steps: int = 100_000
    integrator: str = "euler"
    record_iterates: bool = False
    guard: float = RESIDUAL_GUARD
    delta_floor: float = 1e-3

    def __post_init__(self):
        if not self.lam > 0:
            raise InputError("lambda must be positive")
        if not self.sigma > 0:
            raise InputError("sigma must be positive")
        if not (self.gamma > 0 and self.tol > 0):
            raise InputError("gamma and tol must be positive")
        if int(self.max_steps) <= 0:
            raise InputError("max_steps must be a positive integer")
        if self.integrator not in ("euler", "rk4"):
            raise InputError(f"integrator must be 'euler' or 'rk4', got {self.integrator!r}")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class SolutionCertificate:
    x_star: np.ndarray
    residual_norm: float
    iterations: int
    history: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(eq=False)
class Trace:
    """Column-oriented run record; row ``k`` is the state after ``k`` steps."""

    time: np.ndarray
    residual_norm: np.ndarray
    lyapunov: np.ndarray
    phi: np.ndarray
    distance_to_solution: np.ndarray
    terminal_status: str
    x_final: np.ndarray
    iterates: Optional[np.ndarray] = None
    x_star: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.residual_norm)

    @property
    def step(self):
        return np.arange(len(self), dtype=np.int64)

    @property
    def steps(self):
        """Number of steps taken (rows minus the initial row)."""
        return len(self) - 1

    @property
    def has_solution(self):
        return self.x_star is not None

    def rows(self):
        for i in range(len(self)):
            yield {
                "step": i,
                "time": float(self.time[i]),
                "residual_norm": float(self.residual_norm[i]),
                "lyapunov": None if not self.has_solution else float(self.lyapunov[i]),
                "phi": float(self.phi[i]),
                "distance_to_solution": None
                if not self.has_solution
                else float(self.distance_to_solution[i]),
            }

    def to_csv(self, path):
        def fmt(v):
            return "" if v is None else repr(float(v))

        lines = [",".join(CSV_COLUMNS)]
        have = self.has_solution
        for i in range(len(self)):
            lines.append(
                ",".join(
                    (
                        str(i),
                        fmt(self.time[i]),
                        fmt(self.residual_norm[i]),
                        fmt(self.lyapunov[i] if have else None),
                        fmt(self.phi[i]),
                        fmt(self.distance_to_solution[i] if have else None),
                    )
                )
            )
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")


def _require_assumption(P, lam):
    if not check_assumption_A(P.mu_A, P.mu_B, P.L, lam):
        raise IllPosedParameterError(
            f"Assumption (A) fails at lambda={lam} (mu_A={P.mu_A}, mu_B={P.mu_B}, L={P.L})"
        )


def _packed(P, lam, backend):
    if resolve_backend(backend) != "numba":
        return None
    return kernels.pack(P, lam)


def solve_fixed_point(P, lam, x0, tol=1e-12, max_iter=100_000, record=False,
                      check=True, backend=None):
    """Banach iteration ``x <- T(x)`` until ``|x - T(x)| <= tol``.

    With ``record=True`` the certificate carries every iterate (row 0 is x0).
    """
    if check:
        _require_assumption(P, lam)
    x0 = as_vector(x0, P.dim, name="x0")
    pk = _packed(P, lam, backend)
    if pk is not None:
        x, rn, it, hist = kernels.fixed_point_loop(x0, pk, float(tol), int(max_iter), record)
        hist = hist if record else None
    else:
        x = x0.copy()
        hist = [x] if record else None
        it = 0
        while True:
            t = fb_map(P, lam, x)
            rn = float(np.linalg.norm(x - t))
            if rn <= tol or it == max_iter:
                break
            x = t
            it += 1
            if record:
                hist.append(x)
        if record:
            hist = np.array(hist)
    if not rn <= tol:
        raise NonConvergenceError(
            f"fixed-point iteration stopped after {it} iterations at residual {rn:.3e}",
            residual=rn, iterations=it,
        )
    return SolutionCertificate(np.array(x), float(rn), int(it), hist)


def certify(P, lam, x0, rel_tol=CERT_REL_TOL, backend=None):
    """x* to a residual of ``rel_tol * (1 + |x*|)``, warm-started from ``x0``."""
    x0 = as_vector(x0, P.dim, name="x0")
    rough = solve_fixed_point(P, lam, x0, tol=1e-6 * (1.0 + np.linalg.norm(x0)),
                              check=False, backend=backend)
    tol = rel_tol * (1.0 + np.linalg.norm(rough.x_star))
    return solve_fixed_point(P, lam, rough.x_star, tol=tol, check=False, backend=backend)


def _solution_for(P, lam, x0, x_star, backend):
    if x_star is False:
        return None
    if x_star is None:
        return certify(P, lam, x0, backend=backend).x_star
    return as_vector(x_star, P.dim, name="x_star")


def _make_trace(res, lyap, phis, dist, its, x, status, dt, x_star, record):
    n = len(res)
    return Trace(
        time=np.arange(n, dtype=np.float64) * dt,
        residual_norm=np.asarray(res),
        lyapunov=np.asarray(lyap),
        phi=np.asarray(phis),
        distance_to_solution=np.asarray(dist),
        terminal_status=kernels.STATUS_NAMES[status],
        x_final=np.asarray(x),
        iterates=np.asarray(its) if record else None,
        x_star=x_star,
    )


def _numpy_loop(P, lam, x0, step, phi_of, x_star, tol, max_steps, record):
    """Shared recursion for the numpy path.

    ``step(x, t, r, rn, phi)`` returns the next state; ``phi_of(x, rn)`` the
    recorded scaling.
    """
    res, lyap, phis, dist, its = [], [], [], [], []
    x = x0.copy()
    r0 = 0.0
    status = kernels.MAX_STEPS
    k = 0
    while True:
        t = fb_map(P, lam, x)
        r = x - t
        rn = float(np.linalg.norm(r))
        ph = phi_of(x, rn)
        res.append(rn)
        phis.append(ph)
        if x_star is not None:
            d = float(np.linalg.norm(x - x_star))
            dist.append(d)
            lyap.append(0.5 * d * d)
        else:
            dist.append(np.nan)
            lyap.append(np.nan)
        if record:
            its.append(x.copy())
        if k == 0:
            r0 = max(rn, 1e-300)
        if rn <= tol:
            status = kernels.CONVERGED
            break
        if not math.isfinite(rn) or rn > DIVERGE_FACTOR * r0:
            status = kernels.DIVERGED
            break
        if k == max_steps:
            break
        x = step(x, t, r, rn, ph)
        k += 1
    its = np.array(its) if record else None
    return res, lyap, phis, dist, its, x, status


def _xs_arg(x_star, n):
    if x_star is None:
        return np.zeros(n), False
    return x_star, True


def euler_modified(P, cfg, x0, x_star=None, check=True, backend=None):
    """``x_{n+1} = x_n - gamma phi(x_n) (x_n - T(x_n))``.

    ``x_star=None`` certifies the solution first so the distance and Lyapunov
    columns are filled; pass ``False`` to skip that.
    """
    if check:
        _require_assumption(P, cfg.lam)
    x0 = as_vector(x0, P.dim, name="x0")
    x_star = _solution_for(P, cfg.lam, x0, x_star, backend)
    sp = cfg.scaling
    pk = _packed(P, cfg.lam, backend)
    if pk is not None:
        xs, has = _xs_arg(x_star, P.dim)
        out = kernels.euler_loop(
            x0, pk, kernels.MODE_MODIFIED, float(cfg.gamma), 0.0, sp.c1, sp.c2, sp.kappa1,
            sp.kappa2, float(cfg.guard), xs, has, float(cfg.tol), int(cfg.max_steps),
            DIVERGE_FACTOR, cfg.record_iterates,
        )
    else:
        def phi_of(x, rn):
            return phi_from_norm(rn, sp, cfg.guard * (1.0 + float(np.linalg.norm(x))))

        def step(x, t, r, rn, ph):
            return x - (cfg.gamma * ph) * r

        out = _numpy_loop(P, cfg.lam, x0, step, phi_of, x_star, cfg.tol, cfg.max_steps,
                          cfg.record_iterates)
    return _make_trace(*out, cfg.gamma, x_star, cfg.record_iterates)


def relaxation_window(P, lam, delta_floor=1e-3):
    """Upper end of the stable range for ``gamma*sigma`` in the relaxed nominal scheme."""
    tau = contraction_factor(P.mu_A, P.mu_B, P.L, lam)
    return 2.0 / (1.0 + working_delta(tau, delta_floor))


def euler_nominal(P, sigma, gamma, lam, x0, tol=1e-9, max_steps=100_000, x_star=None,
                  record_iterates=False, check=True, backend=None):
    """Relaxed forward-backward iteration ``x <- (1 - gamma sigma) x + gamma sigma T(x)``.

    At ``gamma*sigma == 1`` the update is exactly ``T(x)``.
    """
    if not (sigma > 0 and gamma > 0):
        raise InputError("sigma and gamma must be positive")
    if check:
        _require_assumption(P, lam)
        hi = relaxation_window(P, lam)
        if not gamma * sigma < hi:
            warnings.warn(
                f"gamma*sigma={gamma * sigma:.4g} outside the contraction window (0, {hi:.4g})",
                RuntimeWarning, stacklevel=2,
            )
    x0 = as_vector(x0, P.dim, name="x0")
    x_star = _solution_for(P, lam, x0, x_star, backend)
    theta = float(gamma * sigma)
    pk = _packed(P, lam, backend)
    if pk is not None:
        xs, has = _xs_arg(x_star, P.dim)
        out = kernels.euler_loop(
            x0, pk, kernels.MODE_NOMINAL, theta, float(sigma), 1.0, 1.0, 0.5, 1.5, 0.0,
            xs, has, float(tol), int(max_steps), DIVERGE_FACTOR, record_iterates,
        )
    else:
        def step(x, t, r, rn, ph):
            return (1.0 - theta) * x + theta * t

        out = _numpy_loop(P, lam, x0, step, lambda x, rn: float(sigma), x_star, tol,
                          max_steps, record_iterates)
    return _make_trace(*out, gamma, x_star, record_iterates)


def integrate_continuous(P, cfg, field, x0, t_end, x_star=None, check=True, backend=None):
    """Classical RK4 with fixed step ``cfg.gamma`` on the nominal or modified field.

    Stops early once the residual drops to ``cfg.tol``.
    """
    if field not in ("nominal", "modified"):
        raise InputError(f"field must be 'nominal' or 'modified', got {field!r}")
    if not t_end > 0:
        raise InputError("t_end must be positive")
    if check:
        _require_assumption(P, cfg.lam)
    x0 = as_vector(x0, P.dim, name="x0")
    x_star = _solution_for(P, cfg.lam, x0, x_star, backend)
    dt = float(cfg.gamma)
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    sp = cfg.scaling
    mode = kernels.MODE_NOMINAL if field == "nominal" else kernels.MODE_MODIFIED
    pk = _packed(P, cfg.lam, backend)
    if pk is not None:
        xs, has = _xs_arg(x_star, P.dim)
        out = kernels.rk4_loop(
            x0, pk, mode, float(cfg.sigma), sp.c1, sp.c2, sp.kappa1, sp.kappa2,
            float(cfg.guard), dt, xs, has, float(cfg.tol), n_steps, DIVERGE_FACTOR,
            cfg.record_iterates,
        )
    else:
        lam = cfg.lam

        def vf(x):
            r = x - fb_map(P, lam, x)
            if mode == kernels.MODE_NOMINAL:
                return -cfg.sigma * r
            rn = float(np.linalg.norm(r))
            if rn <= cfg.guard * (1.0 + float(np.linalg.norm(x))):
                return np.zeros_like(x)
            return -(sp.c1 * rn ** (sp.kappa1 - 1.0) + sp.c2 * rn ** (sp.kappa2 - 1.0)) * r

        def phi_of(x, rn):
            if mode == kernels.MODE_NOMINAL:
                return float(cfg.sigma)
            return phi_from_norm(rn, sp, cfg.guard * (1.0 + float(np.linalg.norm(x))))

        def step(x, t, r, rn, ph):
            f1 = vf(x)
            f2 = vf(x + 0.5 * dt * f1)
            f3 = vf(x + 0.5 * dt * f2)
            f4 = vf(x + dt * f3)
            return x + (dt / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)

        out = _numpy_loop(P, lam, x0, step, phi_of, x_star, cfg.tol, n_steps,
                          cfg.record_iterates)
    return _make_trace(*out, dt, x_star, cfg.record_iterates)


def empirical_settling_time(trace, eps, column="distance_to_solution"):
    """First recorded time after which ``column <= eps`` holds for every later row."""
    if len(trace) == 0:
        raise InputError("empty trace")
    values = np.asarray(getattr(trace, column))
    if column in ("distance_to_solution", "lyapunov") and not trace.has_solution:
        raise InputError(f"trace has no {column} column (no certified solution)")
    outside = np.nonzero(~(values <= eps))[0]
    if outside.size == 0:
        return float(trace.time[0])
    last = int(outside[-1])
    if last == len(values) - 1:
        return None
    return float(trace.time[last + 1])
