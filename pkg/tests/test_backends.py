import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import LAM_E2, e2_instance, vi_box_instance
from fxtsplit import _accel, kernels
from fxtsplit import dynamics as dyn
from fxtsplit import operators as ops
from fxtsplit.fb_core import ProblemInstance, ScalingParams, fb_map

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def lasso_instance():
    f = ops.Function.quadratic(np.diag([1.0, 3.0]), [1.0, 3.0])
    return ProblemInstance(ops.subdifferential(ops.Function.l1_norm(0.5, 2)),
                           ops.gradient_forward(f), 2, "lasso")


def ball_instance():
    C = ops.ConvexSet.ball([0.0, 1.0], 2.0)
    return ProblemInstance(ops.normal_cone(C), ops.linear_forward([[1, -0.5], [0.5, 1]], [-1, 0]),
                           2, "ball")


def halfspace_instance():
    C = ops.ConvexSet.halfspace([1.0, 1.0], 0.5)
    return ProblemInstance(ops.normal_cone(C), ops.linear_forward(np.eye(2), [-2.0, -2.0]),
                           2, "half")


def linear_a_instance():
    A = ops.linear_operator([[1.0, 2.0], [-2.0, 0.5]], [0.1, -0.3])
    return ProblemInstance(A, ops.linear_forward(np.eye(2)), 2, "linA")


INSTANCES = [e2_instance, vi_box_instance, lasso_instance, ball_instance, halfspace_instance,
             linear_a_instance]


@pytest.mark.parametrize("make", INSTANCES)
def test_packed_map_matches_oracles(make, rng):
    P = make()
    pk = kernels.pack(P, 0.4)
    assert pk is not None
    for _ in range(200):
        x = 3 * rng.standard_normal(2)
        assert_allclose(kernels.fb_map(x, pk), fb_map(P, 0.4, x), rtol=1e-12, atol=1e-12)


def test_custom_oracle_is_not_packed():
    B = ops.ForwardOperator(lambda x: x**3, 0.0, 10.0, dim=2)
    assert kernels.pack(ProblemInstance(ops.zero_operator(2), B, 2), 0.1) is None


def _runs(backend):
    P = e2_instance()
    c = dyn.SolverConfig(lam=LAM_E2, gamma=1e-3, tol=1e-6, scaling=ScalingParams(),
                         max_steps=5000, record_iterates=True)
    x0 = [2.0, -1.0]
    return [
        dyn.euler_modified(P, c, x0, x_star=np.zeros(2), backend=backend),
        dyn.euler_nominal(P, 1.0, 0.5, LAM_E2, x0, tol=1e-10, x_star=np.zeros(2),
                          record_iterates=True, backend=backend),
        dyn.integrate_continuous(P, c.with_(gamma=1e-2), "modified", x0, 5.0,
                                 x_star=np.zeros(2), backend=backend),
        dyn.integrate_continuous(P, c.with_(gamma=1e-2), "nominal", x0, 5.0,
                                 x_star=np.zeros(2), backend=backend),
    ]


def test_backends_agree():
    for a, b in zip(_runs("numba"), _runs("numpy")):
        assert a.terminal_status == b.terminal_status
        assert len(a) == len(b)
        assert_allclose(a.residual_norm, b.residual_norm, rtol=1e-12, atol=1e-14)
        assert_allclose(a.iterates, b.iterates, rtol=1e-12, atol=1e-14)


def test_fixed_point_backends_agree(vi_box):
    a = dyn.solve_fixed_point(vi_box, 0.5, [4.0, -3.0], record=True, backend="numba")
    b = dyn.solve_fixed_point(vi_box, 0.5, [4.0, -3.0], record=True, backend="numpy")
    assert a.iterations == b.iterations
    assert_allclose(a.history, b.history, rtol=1e-12, atol=1e-14)


def test_env_flag(monkeypatch):
    monkeypatch.setenv("FXTSPLIT_BACKEND", "numpy")
    assert _accel.resolve_backend() == "numpy"
    monkeypatch.setenv("FXTSPLIT_BACKEND", "bogus")
    with pytest.raises(ValueError):
        _accel.resolve_backend()
    with pytest.raises(ValueError):
        _accel.resolve_backend("cuda")


def test_long_run_grows_buffers():
    P = e2_instance()
    c = dyn.SolverConfig(lam=LAM_E2, gamma=1e-4, tol=1e-9)
    tr = dyn.integrate_continuous(P, c, "modified", [1.0, 0.0], 50.0, x_star=np.zeros(2))
    assert tr.terminal_status == "converged" and len(tr) > 4096
    assert np.all(np.isfinite(tr.residual_norm))
