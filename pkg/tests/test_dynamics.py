import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import LAM_E2, e2_instance, identity_instance
from fxtsplit import dynamics as dyn
from fxtsplit.errors import IllPosedParameterError, InputError, NonConvergenceError
from fxtsplit.fb_core import ScalingParams, fb_map, residual
from fxtsplit.feasibility import contraction_factor, working_delta
from fxtsplit.settling import build_bound

TAU_E2 = math.sqrt(0.2)


def cfg(lam, **kw):
    return dyn.SolverConfig(lam=lam, **kw)


def test_solve_fixed_point_identity():
    cert = dyn.solve_fixed_point(identity_instance(2), 1.0, [7, 7])
    assert cert.iterations == 1
    assert_allclose(cert.x_star, [0, 0])


def test_solve_fixed_point_e2():
    cert = dyn.solve_fixed_point(e2_instance(), LAM_E2, [1, 1], tol=1e-13)
    # the unique zero of the invertible M
    assert_allclose(cert.x_star, np.linalg.solve([[1, -0.5], [0.5, 1]], [0, 0]), atol=1e-12)


def test_solve_fixed_point_vi(vi_box):
    # frozen from a grid search of |x - P_C(x - B x)| over the box
    cert = dyn.solve_fixed_point(vi_box, 1.0, [0.2, 0.7])
    assert_allclose(cert.x_star, [1.0, 1.0], atol=1e-12)


def test_solve_fixed_point_errors(e2):
    with pytest.raises(NonConvergenceError) as exc:
        dyn.solve_fixed_point(e2, LAM_E2, [1e6, 1e6], tol=1e-14, max_iter=3)
    assert exc.value.iterations == 3
    with pytest.raises(IllPosedParameterError):
        dyn.solve_fixed_point(e2, 5.0, [1, 1])


def test_certify_residual(vi_box):
    cert = dyn.certify(vi_box, 0.5, [3.0, -4.0])
    assert np.linalg.norm(residual(vi_box, 0.5, cert.x_star)) <= 1e-12


def test_euler_modified_at_solution(e2):
    tr = dyn.euler_modified(e2, cfg(LAM_E2), [0, 0])
    assert tr.steps == 0 and tr.terminal_status == "converged"


def test_euler_modified_hand_step():
    P = identity_instance(1)
    c = cfg(1.0, gamma=0.1, tol=1e-6, max_steps=1, record_iterates=True)
    tr = dyn.euler_modified(P, c, [9.0])
    assert tr.iterates[1, 0] == pytest.approx(6.0, abs=1e-14)


def test_euler_modified_steps_within_n_star():
    P = identity_instance(1)
    nu = 4
    sp = ScalingParams.from_nu(nu)
    delta = working_delta(contraction_factor(P.mu_A, P.mu_B, P.L, 1.0))
    for gamma in (1e-1, 1e-2, 1e-3, 1e-4):
        runs = [dyn.euler_modified(P, cfg(1.0, gamma=gamma, tol=1e-6, scaling=sp,
                                          max_steps=2_000_000), [x0])
                for x0 in (1e2, 1e6)]
        if all(r.terminal_status == "converged" for r in runs):
            break
    else:
        pytest.fail("no step size converged from both starting points")
    ns = build_bound(delta, sp, nu=nu, gamma=gamma).n_star
    assert all(r.steps <= ns for r in runs)


def test_euler_nominal_matches_banach(e2):
    tr = dyn.euler_nominal(e2, 1.0, 1.0, LAM_E2, [3.0, -2.0], tol=1e-300, max_steps=60,
                           record_iterates=True)
    x = np.array([3.0, -2.0])
    for k in range(60):
        assert tr.iterates[k].tobytes() == x.tobytes()
        x = fb_map(e2, LAM_E2, x)


def test_euler_nominal_contraction(e2):
    tr = dyn.euler_nominal(e2, 1.0, 1.0, LAM_E2, [5.0, 1.0], tol=1e-12, x_star=np.zeros(2),
                           record_iterates=True)
    d = np.linalg.norm(tr.iterates, axis=1)
    assert np.all(d[1:] <= TAU_E2 * d[:-1] * (1 + 1e-12))


def test_euler_nominal_relaxed_factor(e2):
    tr = dyn.euler_nominal(e2, 1.0, 0.5, LAM_E2, [5.0, 1.0], tol=1e-12, x_star=np.zeros(2))
    assert tr.terminal_status == "converged"
    d = tr.distance_to_solution
    assert np.max(d[1:] / d[:-1]) <= 1 - 0.5 * (1 - TAU_E2) + 1e-12


def test_euler_nominal_window_warning(e2):
    with pytest.warns(RuntimeWarning):
        dyn.euler_nominal(e2, 1.0, 1.5, LAM_E2, [1.0, 1.0], max_steps=10)


def test_divergence_detected(e2):
    tr = dyn.euler_nominal(e2, 1.0, 50.0, LAM_E2, [1.0, 1.0], max_steps=1000, check=False)
    assert tr.terminal_status == "diverged"


def test_rk4_nominal_exponential():
    P = identity_instance(1)
    c = cfg(1.0, gamma=1e-3, tol=1e-300, record_iterates=True)
    tr = dyn.integrate_continuous(P, c, "nominal", [1.0], 5.0)
    assert_allclose(tr.iterates[:, 0], np.exp(-tr.time), rtol=1e-12, atol=0)


def test_rk4_modified_at_solution(e2):
    tr = dyn.integrate_continuous(e2, cfg(LAM_E2, gamma=1e-3), "modified", [0, 0], 1.0)
    assert tr.steps == 0
    assert_allclose(tr.x_final, [0, 0])


def test_rk4_modified_settles_before_t_max(e2):
    b = build_bound(TAU_E2, ScalingParams(), nu=4)
    c = cfg(LAM_E2, gamma=1e-4, tol=1e-9)
    for radius in (1e-1, 1e3):
        tr = dyn.integrate_continuous(e2, c, "modified", [radius, 0.0], 1.5 * b.t_max_general)
        assert tr.terminal_status == "converged"
        assert tr.time[-1] <= b.t_max_general


def test_rk4_argument_checks(e2):
    with pytest.raises(InputError):
        dyn.integrate_continuous(e2, cfg(LAM_E2), "bogus", [1, 1], 1.0)
    with pytest.raises(InputError):
        dyn.integrate_continuous(e2, cfg(LAM_E2), "modified", [1, 1], 0.0)


def _synthetic(values, dt=0.5):
    v = np.asarray(values, dtype=float)
    return dyn.Trace(time=np.arange(len(v)) * dt, residual_norm=v, lyapunov=0.5 * v**2,
                     phi=np.ones_like(v), distance_to_solution=v, terminal_status="converged",
                     x_final=np.zeros(1), x_star=np.zeros(1))


def test_empirical_settling_time():
    assert dyn.empirical_settling_time(_synthetic([0, 0, 0]), 1e-9) == 0.0
    assert dyn.empirical_settling_time(_synthetic([4, 3, 2, 1, 0.5]), 1.5) == 1.5
    assert dyn.empirical_settling_time(_synthetic([4, 3, 2]), 1.0) is None


def test_empirical_settling_time_reverse_scan(rng):
    for _ in range(50):
        v = rng.uniform(0, 2, 30)
        eps = 1.0
        k = len(v)
        while k > 0 and v[k - 1] <= eps:
            k -= 1
        expect = None if k == len(v) else k * 0.5
        assert dyn.empirical_settling_time(_synthetic(v), eps) == expect


def test_trace_csv(tmp_path, e2):
    tr = dyn.euler_modified(e2, cfg(LAM_E2, tol=1e-6), [1.0, 0.0])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    tr.to_csv(p1)
    dyn.euler_modified(e2, cfg(LAM_E2, tol=1e-6), [1.0, 0.0]).to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == ",".join(dyn.CSV_COLUMNS)
    assert len(lines) == len(tr) + 1
    res = np.array([float(l.split(",")[2]) for l in lines[1:]])
    assert np.all(np.diff(res) <= 0)


def test_trace_without_solution(tmp_path, e2):
    tr = dyn.euler_modified(e2, cfg(LAM_E2, tol=1e-6), [1.0, 0.0], x_star=False)
    assert not tr.has_solution
    tr.to_csv(tmp_path / "t.csv")
    row = (tmp_path / "t.csv").read_text().splitlines()[1].split(",")
    assert row[3] == "" and row[5] == ""
    with pytest.raises(InputError):
        dyn.empirical_settling_time(tr, 1e-6)
