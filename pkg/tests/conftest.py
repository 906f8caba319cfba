import numpy as np
import pytest

from fxtsplit import operators as ops
from fxtsplit.fb_core import ProblemInstance

M_E2 = np.array([[1.0, -0.5], [0.5, 1.0]])
LAM_E2 = 0.8


def e2_instance():
    return ProblemInstance(ops.zero_operator(2), ops.linear_forward(M_E2), 2, "E2")


def vi_box_instance():
    C = ops.ConvexSet.box([0.0, 0.0], [1.0, 1.0])
    B = ops.linear_forward(np.eye(2), [-2.0, -2.0])
    return ProblemInstance(ops.normal_cone(C), B, 2, "vi-box")


def identity_instance(n=1):
    return ProblemInstance(ops.zero_operator(n), ops.identity_forward(n), n, "id")


@pytest.fixture
def e2():
    return e2_instance()


@pytest.fixture
def vi_box():
    return vi_box_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[k])
