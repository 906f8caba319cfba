import numpy as np
import pytest
from numpy.testing import assert_allclose

from fxtsplit import operators as ops
from fxtsplit.dynamics import certify
from fxtsplit.errors import AssumptionError, InvalidSpecError
from fxtsplit.fb_core import fb_map
from fxtsplit.problems import (
    CopSpec,
    MviSpec,
    ViSpec,
    closed_form_map,
    optimality_violation,
    residual_parity_check,
    sample_feasible,
    to_inclusion,
)

BOX01 = ops.ConvexSet.box([0, 0], [1, 1])
M_E2 = [[1.0, -0.5], [0.5, 1.0]]


def solve(spec, lam, x0=(0.3, -0.2)):
    P = to_inclusion(spec, lam=lam).instance
    return certify(P, lam, list(x0)).x_star


def test_cop_unconstrained():
    spec = CopSpec(ops.Function.quadratic(np.eye(2)), ops.Function.zero(2))
    P = to_inclusion(spec, lam=0.5).instance
    assert_allclose(fb_map(P, 0.5, [4, -2]), [2, -1])
    assert_allclose(solve(spec, 0.5), [0, 0], atol=1e-12)


def test_cop_box():
    # 1e5 projected-gradient steps land on (1, 1)
    spec = CopSpec(ops.Function.quadratic(np.eye(2), [2, 2]), ops.Function.indicator(BOX01))
    assert_allclose(solve(spec, 0.5), [1, 1], atol=1e-10)


def test_cop_lasso():
    # proximal-gradient oracle, 1e5 steps: (0.5, 5/6)
    spec = CopSpec(ops.Function.quadratic(np.diag([1.0, 3.0]), [1.0, 3.0]),
                   ops.Function.l1_norm(0.5, 2))
    assert_allclose(solve(spec, 0.2), [0.4999999999999998, 0.8333333333333333], atol=1e-8)


def test_cop_requires_smooth_f():
    with pytest.raises(InvalidSpecError):
        to_inclusion(CopSpec(ops.Function.l1_norm(1.0, 2), ops.Function.zero(2)))


def test_cop_enforced_strong_convexity():
    spec = CopSpec(ops.Function.quadratic(np.diag([0.0, 1.0])), ops.Function.zero(2))
    with pytest.raises(AssumptionError):
        to_inclusion(spec, lam=0.5, enforce=True)
    with pytest.warns(RuntimeWarning):
        adapted = to_inclusion(spec, lam=0.5)
    assert adapted.warnings


def test_mvi_zero_g_is_equation():
    F = ops.linear_forward([[2.0, 1.0], [-1.0, 2.0]], [-3.0, 1.0])
    x = solve(MviSpec(F, ops.Function.zero(2)), 0.3)
    assert_allclose(np.array([[2.0, 1.0], [-1.0, 2.0]]) @ x, [3.0, -1.0], atol=1e-10)


def test_mvi_soft_threshold():
    # per-coordinate scan of 0 in x - 1 + d|x| over [-3, 3]: x = 0
    F = ops.linear_forward(np.eye(2), [-1.0, -1.0])
    assert_allclose(solve(MviSpec(F, ops.Function.l1_norm(1.0, 2)), 0.5), [0, 0], atol=1e-12)


def test_mvi_ball():
    F = ops.linear_forward([[2.0, 1.0], [-1.0, 2.0]])
    g = ops.Function.indicator(ops.ConvexSet.ball([0, 0], 1.0))
    assert_allclose(solve(MviSpec(F, g), 0.3, x0=(3, 3)), [0, 0], atol=1e-12)


def test_vi_examples():
    F = ops.identity_forward(3)
    C = ops.ConvexSet.box([-1, -1, -1], [1, 1, 1])
    assert_allclose(solve(ViSpec(F, C), 0.5, x0=(2, 0, -5)), [0, 0, 0], atol=1e-12)
    F = ops.linear_forward(np.eye(2), [-2.0, -2.0])
    assert_allclose(solve(ViSpec(F, BOX01), 1.0), [1, 1], atol=1e-12)


def test_vi_halfspace():
    # KKT candidates: the interior zero (0.8, -0.4) is infeasible, the boundary gives (0, 0)
    F = ops.linear_forward(M_E2, [-1.0, 0.0])
    C = ops.ConvexSet.halfspace([1, 0], 0.0)
    assert_allclose(solve(ViSpec(F, C), 0.8), [0, 0], atol=1e-12)


def test_cop_and_vi_agree():
    lam = 0.5
    cop = CopSpec(ops.Function.quadratic(np.eye(2), [2, 2]), ops.Function.indicator(BOX01))
    vi = ViSpec(ops.linear_forward(np.eye(2), [-2.0, -2.0]), BOX01)
    assert_allclose(solve(cop, lam), solve(vi, lam), atol=1e-10)


@pytest.mark.parametrize("spec", [
    CopSpec(ops.Function.quadratic(np.diag([1.0, 3.0]), [1, 3]), ops.Function.l1_norm(0.5, 2)),
    MviSpec(ops.linear_forward(M_E2, [1, -1]), ops.Function.indicator(BOX01)),
    ViSpec(ops.linear_forward(M_E2, [-1, 0]), ops.ConvexSet.ball([0, 1], 2.0)),
])
def test_residual_parity(spec):
    rep = residual_parity_check(spec, 0.6, samples=300, rng=0)
    assert rep.passed, rep


def test_closed_form_map_cop():
    spec = CopSpec(ops.Function.quadratic(np.eye(2), [2, 2]), ops.Function.indicator(BOX01))
    assert_allclose(closed_form_map(spec, 0.5, [0, 0]), [1, 1])


def test_optimality_violation():
    vi = ViSpec(ops.linear_forward(np.eye(2), [-2.0, -2.0]), BOX01)
    assert optimality_violation(vi, [1, 1], 1.0, samples=500, rng=0) <= 1e-12
    assert optimality_violation(vi, [0.5, 0.5], 1.0, samples=500, rng=0) > 0.1
    mvi = MviSpec(ops.linear_forward(np.eye(2), [-1.0, -1.0]), ops.Function.l1_norm(1.0, 2))
    assert optimality_violation(mvi, [0, 0], 0.5, samples=500, rng=0) <= 1e-12
    assert optimality_violation(mvi, [1, 1], 0.5, samples=500, rng=0) > 0


def test_sample_feasible():
    pts = sample_feasible(ops.ConvexSet.halfspace([1, 1], 0.0), 50, rng=1)
    assert pts.shape == (50, 2) and np.all(pts.sum(axis=1) <= 1e-12)
