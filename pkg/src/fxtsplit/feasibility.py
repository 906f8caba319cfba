"""Parameter feasibility for the forward-backward map.

Assumption (A) asks for ``lam > 0`` with ``1 + lam*mu_A > 0`` and
``2(mu_A + mu_B) + lam*mu_A**2 - lam*L**2 > 0``. Everything here is a pure
function of the declared moduli.
"""

import math
from dataclasses import dataclass
from typing import Optional

from .errors import IllPosedParameterError, InfeasibleError, InputError, InvalidSpecError

DEFAULT_DELTA_FLOOR = 1e-3

B1, B2, B3, INFEASIBLE = "B1", "B2", "B3", "infeasible"


@dataclass(frozen=True)
class Interval:
    """Open interval ``(lo, hi)``; ``hi`` may be ``math.inf``."""

    lo: float
    hi: float

    def __contains__(self, lam):
        return self.lo < lam < self.hi

    @property
    def empty(self):
        return not self.lo < self.hi

    def as_json(self):
        return [self.lo, "inf" if math.isinf(self.hi) else self.hi]


@dataclass(frozen=True)
class FeasibilityReport:
    branch: str
    lambda_interval: Optional[Interval]
    lam: Optional[float] = None
    tau: Optional[float] = None
    delta: Optional[float] = None
    epsilon_delta: Optional[float] = None

    @property
    def kappa1_window(self):
        if self.epsilon_delta is None:
            return None
        return (max(0.0, 1.0 - self.epsilon_delta), 1.0)

    def as_json(self):
        return {
            "branch": self.branch,
            "interval": None if self.lambda_interval is None else self.lambda_interval.as_json(),
            "lambda": self.lam,
            "tau": self.tau,
            "delta": self.delta,
            "epsilon_delta": self.epsilon_delta,
            "kappa1_window": None if self.kappa1_window is None else list(self.kappa1_window),
        }


def _check_moduli(mu_A, mu_B, L):
    if not all(math.isfinite(v) for v in (mu_A, mu_B, L)):
        raise InvalidSpecError("moduli must be finite")
    if L < 0:
        raise InvalidSpecError("L must be >= 0")
    if mu_B > L:
        raise InvalidSpecError(f"mu_B={mu_B} > L={L}: inconsistent forward-operator moduli")


def check_assumption_A(mu_A, mu_B, L, lam):
    return lam > 0 and 1 + lam * mu_A > 0 and 2 * (mu_A + mu_B) + lam * mu_A**2 - lam * L**2 > 0


def check_assumption_A_prime(mu_A, beta, lam):
    """Cocoercive variant: strongly monotone A, beta-cocoercive B, 0 < lam < 2*beta."""
    return mu_A > 0 and beta > 0 and 0 < lam < 2 * beta


def classify(mu_A, mu_B, L):
    _check_moduli(mu_A, mu_B, L)
    s = mu_A + mu_B
    if s > 0:
        return B1
    if s == 0 and mu_A**2 > L**2:
        return B2
    if s < 0 and mu_A > L:
        return B3
    return INFEASIBLE


def feasible_interval(mu_A, mu_B, L):
    """Exact set of lambda satisfying Assumption (A), as an open interval."""
    branch = classify(mu_A, mu_B, L)
    if branch == INFEASIBLE:
        raise InfeasibleError(
            f"no lambda satisfies Assumption (A) for mu_A={mu_A}, mu_B={mu_B}, L={L}", branch
        )
    s = mu_A + mu_B
    cap = -1.0 / mu_A if mu_A < 0 else math.inf
    gap = L**2 - mu_A**2
    if gap > 0:
        # B1 only: lam * gap < 2s
        return Interval(0.0, min(2 * s / gap, cap))
    if gap == 0 or s >= 0:
        return Interval(0.0, cap)
    # B3: lam > -2s / (mu_A^2 - L^2); mu_A > L >= 0 so no cap
    return Interval(-2 * s / (mu_A**2 - L**2), cap)


def contraction_factor(mu_A, mu_B, L, lam):
    """Lipschitz constant of ``J_{lam A} o (Id - lam B)`` implied by the moduli."""
    if not check_assumption_A(mu_A, mu_B, L, lam):
        raise IllPosedParameterError(
            f"Assumption (A) fails at lambda={lam} for mu_A={mu_A}, mu_B={mu_B}, L={L}"
        )
    num = 1 - lam * (2 * mu_B - lam * L**2)
    # mu_B <= L gives num >= (1 - lam*L)^2 >= 0; the clip only absorbs round-off
    return math.sqrt(max(num, 0.0)) / (1 + lam * mu_A)


def working_delta(tau, delta_floor=DEFAULT_DELTA_FLOOR):
    if not 0 <= tau < 1:
        raise InputError(f"tau must be in [0, 1), got {tau}")
    if not 0 < delta_floor < 1:
        raise InputError(f"delta_floor must be in (0, 1), got {delta_floor}")
    return max(tau, delta_floor)


def epsilon_of_delta(delta):
    """``log(delta) / log((1 - delta) / (1 + delta))``."""
    if not 0 < delta < 1:
        raise InputError(f"delta must be in (0, 1), got {delta}")
    return math.log(delta) / math.log((1 - delta) / (1 + delta))


def kappa1_window(delta):
    return (max(0.0, 1.0 - epsilon_of_delta(delta)), 1.0)


def report(mu_A, mu_B, L, lam=None, delta_floor=DEFAULT_DELTA_FLOOR):
    """Full feasibility report; tau/delta/eps are filled when ``lam`` is given and admissible."""
    branch = classify(mu_A, mu_B, L)
    if branch == INFEASIBLE:
        return FeasibilityReport(branch, None, lam)
    interval = feasible_interval(mu_A, mu_B, L)
    if lam is None or not check_assumption_A(mu_A, mu_B, L, lam):
        return FeasibilityReport(branch, interval, lam)
    tau = contraction_factor(mu_A, mu_B, L, lam)
    delta = working_delta(tau, delta_floor)
    return FeasibilityReport(branch, interval, lam, tau, delta, epsilon_of_delta(delta))


def scan_lambda(mu_A, mu_B, L, num=200, upper=None):
    """Grid scan for the lambda with smallest tau (coarse, not an optimizer)."""
    interval = feasible_interval(mu_A, mu_B, L)
    hi = interval.hi if math.isfinite(interval.hi) else (upper or max(10.0, 10 * interval.lo))
    best = None
    for i in range(1, num):
        lam = interval.lo + (hi - interval.lo) * i / num
        if not check_assumption_A(mu_A, mu_B, L, lam):
            continue
        tau = contraction_factor(mu_A, mu_B, L, lam)
        if best is None or tau < best[1]:
            best = (lam, tau)
    return best
