import math

import pytest

from fxtsplit import settling as st_
from fxtsplit.errors import InputError, InvalidSpecError, WindowError
from fxtsplit.fb_core import ScalingParams

DELTA_E2 = math.sqrt(0.2)


def test_q_coefficient():
    for d in (0.1, 0.5, 0.9):
        assert st_.q_coefficient(1.0, 1.0, d) == pytest.approx(1 - d)
    assert st_.q_coefficient(1.0, 1.5, 0.5) == pytest.approx(0.8711914807983153, rel=1e-12)
    # below the kappa1 window the rate goes negative
    assert st_.q_coefficient(1.0, 0.1, 0.5) == pytest.approx(-0.23877982887520044, rel=1e-12)


def test_q_coefficient_direct_ordering():
    # below 1 the direct rate is the sharper one; above 1 it is the smaller one
    for d in (0.1, DELTA_E2, 0.8):
        for k in (0.5, 0.7, 0.9):
            if st_.q_coefficient(1.0, k, d) > 0:
                assert st_.q_coefficient_direct(1.0, k, d) >= st_.q_coefficient(1.0, k, d)
        for k in (1.1, 1.5, 3.0):
            assert st_.q_coefficient_direct(1.0, k, d) < st_.q_coefficient(1.0, k, d)
    assert st_.q_coefficient_direct(1.0, 1.0, 0.3) == pytest.approx(0.7)


def test_p_coefficient():
    p, a = st_.p_coefficient(1.0, 1.0, 0.3)
    assert a == 1.0 and p == pytest.approx(2 * 0.7)
    _, a = st_.p_coefficient(1.0, 0.5, DELTA_E2)
    assert a == 0.75
    assert 2**0.75 * 0.23 == pytest.approx(0.3868, abs=1e-4)
    assert st_.p_coefficient(1.0, 1.5, 0.5)[1] == 1.25


def test_t_max_general():
    assert st_.t_max_general(1, 0.5, 1, 1.5) == pytest.approx(4.0)
    assert st_.t_max_general(2, 0.75, 4, 1.25) == pytest.approx(3.0)
    with pytest.raises(InputError):
        st_.t_max_general(1, 1.0, 1, 1.5)
    assert st_.t_max_general(1, 1 - 1e-9, 1, 1.5) > 1e8


def test_t_max_pi():
    # pi * 2 / sqrt(pi^2 * pi^2) = 2 / pi
    assert st_.t_max_pi(math.pi**2, math.pi**2, 2) == pytest.approx(2 / math.pi)
    assert st_.t_max_pi(math.pi, math.pi, 2) == pytest.approx(2.0)
    assert st_.t_max_pi(1, 4, 1.5) == pytest.approx(2.356194490192345)
    assert st_.t_max_pi(1, 1, 1 + 1e-12) == pytest.approx(math.pi)
    with pytest.raises(InputError):
        st_.t_max_pi(1, 1, 1.0)


def test_kappa_from_nu():
    assert st_.kappa_from_nu(4) == (0.5, 1.5)
    assert st_.kappa_from_nu(10) == pytest.approx((0.8, 1.2))
    with pytest.raises(InputError):
        st_.kappa_from_nu(2)
    nu0 = st_.min_nu(DELTA_E2)
    assert nu0 == pytest.approx(max(2, 2 / 0.8361379690922774))
    k1, _ = st_.kappa_from_nu(nu0 * 1.001)
    assert k1 > 1 - 0.8361379690922774


def test_discrete_envelope():
    v, ns = st_.discrete_envelope(1.0, 1.0, 4, 1e-3, 0.5, 0)
    assert math.isinf(v)
    # r = s and n at half of n*: tan(pi/4) = 1
    nu, g = 4, 1e-3
    ns = st_.n_star(1.0, 1.0, nu, g)
    half = nu * math.pi / (4 * g)
    v, _ = st_.discrete_envelope(1.0, 1.0, nu, g, 0.5, half)
    assert v == pytest.approx(math.sqrt(2), rel=1e-9)
    v, _ = st_.discrete_envelope(1.0, 1.0, nu, g, 0.5, ns)
    assert v < 1e-9
    with pytest.raises(InputError):
        st_.discrete_envelope(1.0, 1.0, 4, 1e-3, 0.5, ns + 10**6)


def test_envelope_decreasing():
    b = st_.build_bound(DELTA_E2, ScalingParams(), nu=4, gamma=1e-3)
    vals = [b.envelope(n) for n in range(1, b.n_star + 1, 50)]
    assert all(a >= c for a, c in zip(vals, vals[1:]))


def test_build_bound_e2():
    # every field recomputed by hand from the closed forms
    b = st_.build_bound(DELTA_E2, ScalingParams(), nu=4, gamma=1e-3)
    assert b.q1 == pytest.approx(0.22975292054736124, rel=1e-12)
    assert b.q2 == pytest.approx(0.8705003597931286, rel=1e-12)
    assert b.p1 == pytest.approx(0.3863968145646951, rel=1e-12)
    assert b.p2 == pytest.approx(2.070410442956834, rel=1e-12)
    assert (b.alpha1, b.alpha2) == (0.75, 1.25)
    assert b.t_max_general == pytest.approx(12.284036287607645, rel=1e-12)
    assert b.t_max_pi == pytest.approx(7.024814731040726, rel=1e-12)
    assert b.n_star == 7025
    js = b.as_json()
    assert list(js) == ["delta", "q", "p", "alpha", "t_max_general", "t_max_pi", "nu",
                        "n_star", "gamma"]


def test_build_bound_rejections():
    with pytest.raises(WindowError) as exc:
        st_.build_bound(0.9, ScalingParams(1, 1, 0.2, 1.5))
    assert exc.value.window[0] == pytest.approx(1 - 0.03578288305626676)
    with pytest.raises(InvalidSpecError):
        ScalingParams(1, 1, 1.0, 1.0)
    with pytest.raises(InputError):
        st_.build_bound(0.0, ScalingParams())


def test_direct_bound_e2():
    b = st_.build_bound(DELTA_E2, ScalingParams(), nu=4, coefficients="direct")
    d = DELTA_E2
    assert b.q1 == pytest.approx((1 - d) / math.sqrt(1 + d))
    assert b.q2 == pytest.approx((1 - d) ** 1.5)
    assert b.t_max_general == pytest.approx(1 / (0.25 * b.p1) + 1 / (0.25 * b.p2))


def _e2_vdot(d):
    # A = 0, B = Mx, lam = 0.8: r = 0.8 M x, <x, r> = 0.8 d^2, |r| = 0.8 sqrt(1.25) d
    rn = 0.8 * math.sqrt(1.25) * d
    return -(rn**-0.5 + rn**0.5) * 0.8 * d * d


def _rhs(b, d):
    V = 0.5 * d * d
    return -(b.p1 * V**b.alpha1 + b.p2 * V**b.alpha2)


def test_standard_constants_overstate_decay_far_from_solution():
    b = st_.build_bound(DELTA_E2, ScalingParams(), nu=4)
    assert all(_e2_vdot(d) <= _rhs(b, d) for d in (1e-3, 0.1, 1.0, 5.0))
    # beyond |x - x*| ~ 5.4 the exact decay is slower than the bound claims
    assert all(_e2_vdot(d) > _rhs(b, d) for d in (6.0, 10.0, 100.0, 1e6))


def test_direct_constants_hold_everywhere():
    b = st_.build_bound(DELTA_E2, ScalingParams(), nu=4, coefficients="direct")
    for k in range(-60, 61):
        d = 10.0 ** (k / 10)
        assert _e2_vdot(d) <= _rhs(b, d) * (1 - 1e-12)
