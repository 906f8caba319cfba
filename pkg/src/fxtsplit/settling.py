"""Closed-form settling-time bounds.

Coefficient chain: ``q(c, k)`` from the contraction constant ``delta``, then
``p = 2**alpha * q`` with ``alpha = (1 + k)/2``, giving the Lyapunov
inequality ``dV/dt <= -(p1 V**alpha1 + p2 V**alpha2)`` for
``V = 0.5 |x - x*|^2``. From it come the two fixed-time bounds and the
discrete envelope of the forward-Euler scheme.
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import InputError, WindowError
from .feasibility import epsilon_of_delta

# V = 0.5 |x - x*|^2 satisfies V >= rho |x - x*|^2 with rho = 1/2
RHO = 0.5


def q_coefficient(c, kappa, delta):
    """``c/(1-delta)**(1-kappa) * (((1-delta)/(1+delta))**(1-kappa) - delta)``.

    Negative when ``kappa`` is outside its admissible window.
    """
    if not 0 < delta < 1:
        raise InputError(f"delta must be in (0, 1), got {delta}")
    e = 1.0 - kappa
    return c / (1.0 - delta) ** e * (((1.0 - delta) / (1.0 + delta)) ** e - delta)


def q_coefficient_direct(c, kappa, delta):
    """Rate constant that follows from the contraction sandwich alone.

    Uses ``<x-x*, r> >= (1-delta)|x-x*|^2`` together with the side of
    ``(1-delta)|x-x*| <= |r| <= (1+delta)|x-x*|`` that bounds
    ``|r|**(kappa-1)`` from below: ``1+delta`` for ``kappa < 1``,
    ``1-delta`` for ``kappa > 1``. Always positive.
    """
    if not 0 < delta < 1:
        raise InputError(f"delta must be in (0, 1), got {delta}")
    side = 1.0 + delta if kappa < 1 else 1.0 - delta
    return c * (1.0 - delta) * side ** (kappa - 1.0)


def p_coefficient(c, kappa, delta, q_func=q_coefficient):
    alpha = (1.0 + kappa) / 2.0
    return 2.0**alpha * q_func(c, kappa, delta), alpha


def t_max_general(p1, alpha1, p2, alpha2):
    """``1/(p1 (1 - alpha1)) + 1/(p2 (alpha2 - 1))``."""
    if not (p1 > 0 and p2 > 0):
        raise InputError("p1 and p2 must be positive")
    if not 0 < alpha1 < 1:
        raise InputError(f"alpha1 must lie in (0, 1), got {alpha1}")
    if not alpha2 > 1:
        raise InputError(f"alpha2 must exceed 1, got {alpha2}")
    return 1.0 / (p1 * (1.0 - alpha1)) + 1.0 / (p2 * (alpha2 - 1.0))


def t_max_pi(p1, p2, xi):
    """``pi xi / sqrt(p1 p2)`` for exponents ``1 -+ 1/(2 xi)``."""
    if not (p1 > 0 and p2 > 0):
        raise InputError("p1 and p2 must be positive")
    if not xi > 1:
        raise InputError(f"xi must exceed 1, got {xi}")
    return math.pi * xi / math.sqrt(p1 * p2)


def kappa_from_nu(nu):
    if not nu > 2:
        raise InputError(f"nu must exceed 2, got {nu}")
    return 1.0 - 2.0 / nu, 1.0 + 2.0 / nu


def min_nu(delta):
    """Smallest admissible nu (exclusive): ``max(2, 2/eps(delta))``."""
    return max(2.0, 2.0 / epsilon_of_delta(delta))


def n_star(r, s, nu, gamma):
    """``ceil(nu pi / (2 gamma sqrt(r s)))``."""
    if not (r > 0 and s > 0 and gamma > 0):
        raise InputError("r, s and gamma must be positive")
    return math.ceil(nu * math.pi / (2.0 * gamma * math.sqrt(r * s)))


def discrete_envelope(r, s, nu, gamma, rho, n):
    """Envelope of ``|x_n - x*|`` for the Euler scheme, without the additive eps.

    Returns ``(value, n_star)``; ``value`` is ``inf`` at ``n = 0``.
    """
    if not (r > 0 and s > 0 and gamma > 0 and rho > 0):
        raise InputError("r, s, gamma and rho must be positive")
    if not nu > 2:
        raise InputError(f"nu must exceed 2, got {nu}")
    ns = n_star(r, s, nu, gamma)
    if n < 0 or n > ns:
        raise InputError(f"n={n} outside [0, n*={ns}]")
    if n == 0:
        return math.inf, ns
    arg = math.pi / 2.0 - math.sqrt(r * s) * gamma * n / nu
    # ceil can push the last step a hair past tan's zero
    t = max(math.tan(arg), 0.0) if arg > 0 else 0.0
    return (math.sqrt(r / s) * t) ** (nu / 2.0) / math.sqrt(rho), ns


@dataclass(frozen=True)
class SettlingBound:
    delta: float
    q1: float
    q2: float
    p1: float
    p2: float
    alpha1: float
    alpha2: float
    t_max_general: float
    t_max_pi: Optional[float] = None
    xi: Optional[float] = None
    nu: Optional[float] = None
    r: float = 0.0
    s: float = 0.0
    rho: float = RHO
    gamma: Optional[float] = None
    n_star: Optional[int] = None
    coefficients: str = "standard"

    def as_json(self):
        return {
            "delta": self.delta,
            "q": [self.q1, self.q2],
            "p": [self.p1, self.p2],
            "alpha": [self.alpha1, self.alpha2],
            "t_max_general": self.t_max_general,
            "t_max_pi": self.t_max_pi,
            "nu": self.nu,
            "n_star": self.n_star,
            "gamma": self.gamma,
        }

    def envelope(self, n):
        if self.nu is None or self.gamma is None:
            raise InputError("envelope needs nu and gamma")
        return discrete_envelope(self.r, self.s, self.nu, self.gamma, self.rho, n)[0]

    def to_dict(self):
        return asdict(self)


_Q_FUNCS = {"standard": q_coefficient, "direct": q_coefficient_direct}


def build_bound(delta, scaling, nu=None, xi=None, gamma=None, coefficients="standard"):
    """Populate a :class:`SettlingBound` for ``scaling`` at contraction ``delta``.

    ``nu`` replaces the scaling's exponents by ``(1 - 2/nu, 1 + 2/nu)``.
    ``t_max_pi`` is filled when the exponents are symmetric about 1
    (``xi = 1/(1 - kappa1)``); an explicit ``xi`` must match them.
    ``coefficients="direct"`` swaps in :func:`q_coefficient_direct`.
    """
    if coefficients not in _Q_FUNCS:
        raise InputError(f"coefficients must be one of {sorted(_Q_FUNCS)}")
    q_func = _Q_FUNCS[coefficients]
    k1, k2 = (scaling.kappa1, scaling.kappa2) if nu is None else kappa_from_nu(nu)
    eps = epsilon_of_delta(delta)
    window = (max(0.0, 1.0 - eps), 1.0)
    if not k2 > 1:
        raise WindowError(f"kappa2={k2} must exceed 1", window)
    if coefficients == "standard" and not (window[0] < k1 < 1):
        raise WindowError(
            f"kappa1={k1} outside the admissible window ({window[0]:.6g}, 1) at delta={delta:.6g}",
            window,
        )
    if not 0 < k1 < 1:
        raise WindowError(f"kappa1={k1} must lie in (0, 1)", window)

    q1 = q_func(scaling.c1, k1, delta)
    q2 = q_func(scaling.c2, k2, delta)
    p1, a1 = p_coefficient(scaling.c1, k1, delta, q_func)
    p2, a2 = p_coefficient(scaling.c2, k2, delta, q_func)
    t_gen = t_max_general(p1, a1, p2, a2)

    symmetric = math.isclose(k1 + k2, 2.0, rel_tol=0.0, abs_tol=1e-12)
    if xi is not None:
        if not symmetric or not math.isclose(1.0 / (1.0 - k1), xi, rel_tol=1e-12):
            raise InputError(f"xi={xi} does not match exponents ({k1}, {k2})")
    elif symmetric:
        xi = 1.0 / (1.0 - k1)
    t_pi = t_max_pi(p1, p2, xi) if xi is not None and xi > 1 else None
    if t_pi is None:
        xi = None

    ns = None
    if nu is not None and gamma is not None:
        ns = n_star(p1, p2, nu, gamma)
    return SettlingBound(
        delta=delta, q1=q1, q2=q2, p1=p1, p2=p2, alpha1=a1, alpha2=a2,
        t_max_general=t_gen, t_max_pi=t_pi, xi=xi, nu=nu, r=p1, s=p2,
        gamma=gamma, n_star=ns, coefficients=coefficients,
    )
