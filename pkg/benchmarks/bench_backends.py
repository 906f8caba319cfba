"""Compare the numba kernels against the pure numpy path.

    python benchmarks/bench_backends.py [--repeat 3] [--quick]

Each case runs once untimed (JIT compile / cache load), then ``--repeat`` times
per backend; the best wall time is reported along with the largest
difference between the two residual columns.
"""

import argparse
import time

import numpy as np

from fxtsplit import dynamics as dyn
from fxtsplit import operators as ops
from fxtsplit._accel import HAVE_NUMBA
from fxtsplit.fb_core import ProblemInstance, ScalingParams

M = np.array([[1.0, -0.5], [0.5, 1.0]])


def e2():
    return ProblemInstance(ops.zero_operator(2), ops.linear_forward(M), 2, "E2")


def vi_box(n):
    C = ops.ConvexSet.box(np.zeros(n), np.ones(n))
    rng = np.random.default_rng(0)
    S = rng.standard_normal((n, n)) / np.sqrt(n)
    F = ops.linear_forward(np.eye(n) + (S - S.T) / 2, -2.0 * np.ones(n))
    return ProblemInstance(ops.normal_cone(C), F, n, f"vi-box-{n}")


def cases(quick):
    t_end = 5.0 if quick else 20.0
    P = e2()
    cfg = dyn.SolverConfig(lam=0.8, gamma=1e-4, tol=1e-9, scaling=ScalingParams())
    yield "rk4 modified, E2, dt=1e-4", lambda b: dyn.integrate_continuous(
        P, cfg, "modified", [1e3, 0.0], t_end, x_star=np.zeros(2), backend=b)
    yield "euler modified, E2, gamma=1e-4", lambda b: dyn.euler_modified(
        P, cfg.with_(max_steps=200_000, tol=1e-8), [1e3, 0.0], x_star=np.zeros(2), backend=b)
    Q = vi_box(50)
    c50 = dyn.SolverConfig(lam=0.5, gamma=1e-3, tol=1e-7, max_steps=50_000)
    yield "euler modified, VI box n=50", lambda b: dyn.euler_modified(
        Q, c50, 3.0 * np.ones(50), x_star=False, backend=b)


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="shorter horizons")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return 1
    print(f"{'case':<34} {'steps':>8} {'numba s':>9} {'numpy s':>9} {'speedup':>8} {'max diff':>9}")
    for name, run in cases(args.quick):
        run("numba")  # compile or load from cache
        t_nb, a = best_of(lambda: run("numba"), args.repeat)
        t_np, b = best_of(lambda: run("numpy"), max(1, args.repeat // 3))
        n = min(len(a), len(b))
        diff = float(np.max(np.abs(a.residual_norm[:n] - b.residual_norm[:n])))
        print(f"{name:<34} {a.steps:>8d} {t_nb:>9.4f} {t_np:>9.3f} {t_np / t_nb:>7.0f}x {diff:>9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
