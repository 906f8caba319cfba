"""The forward-backward map and the two vector fields built on it.

``T(x) = J_{lam A}(x - lam B(x))`` and ``r(x) = x - T(x)``. The nominal field
is ``-sigma r``; the modified field is ``-(c1 r/|r|^(1-k1) + c2 r/|r|^(1-k2))``,
evaluated in that fused form so that ``phi -> inf`` times ``r -> 0`` never
appears as an ``inf * 0``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, InvalidSpecError
from .operators import as_vector, evaluate_forward, resolvent

# residuals at or below RESIDUAL_GUARD * (1 + |x|) count as the fixed-point branch of phi
RESIDUAL_GUARD = 1e-14


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """The inclusion ``0 in A(x) + B(x)`` on R^dim."""

    A: object
    B: object
    dim: int
    label: str = ""

    def __post_init__(self):
        if int(self.dim) <= 0:
            raise InvalidSpecError("dimension must be positive")
        for name, op in (("A", self.A), ("B", self.B)):
            if op.dim is not None and op.dim != self.dim:
                raise InvalidSpecError(f"{name} acts on R^{op.dim}, instance is R^{self.dim}")

    @property
    def mu_A(self):
        return self.A.mu

    @property
    def mu_B(self):
        return self.B.mu

    @property
    def L(self):
        return self.B.L


@dataclass(frozen=True)
class ScalingParams:
    c1: float = 1.0
    c2: float = 1.0
    kappa1: float = 0.5
    kappa2: float = 1.5

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise InvalidSpecError("c1 and c2 must be positive")
        if not 0 < self.kappa1 < 1:
            raise InvalidSpecError(f"kappa1 must lie in (0, 1), got {self.kappa1}")
        if not self.kappa2 > 1:
            raise InvalidSpecError(f"kappa2 must exceed 1, got {self.kappa2}")

    @classmethod
    def from_nu(cls, nu, c1=1.0, c2=1.0):
        from .settling import kappa_from_nu

        k1, k2 = kappa_from_nu(nu)
        return cls(c1, c2, k1, k2)


def guard_threshold(x, guard=RESIDUAL_GUARD):
    return guard * (1.0 + float(np.linalg.norm(x)))


def fb_map(P, lam, x):
    x = as_vector(x, P.dim, name="x")
    return resolvent(P.A, lam, x - lam * evaluate_forward(P.B, x))


def residual(P, lam, x):
    x = as_vector(x, P.dim, name="x")
    return x - fb_map(P, lam, x)


def phi_from_norm(rn, sp, threshold=0.0):
    if rn <= threshold:
        return 0.0
    return sp.c1 * rn ** (sp.kappa1 - 1.0) + sp.c2 * rn ** (sp.kappa2 - 1.0)


def phi(P, sp, lam, x, guard=RESIDUAL_GUARD):
    """Scaling ``c1 |r|^(k1-1) + c2 |r|^(k2-1)``; zero inside the residual guard."""
    x = as_vector(x, P.dim, name="x")
    rn = float(np.linalg.norm(residual(P, lam, x)))
    return phi_from_norm(rn, sp, guard_threshold(x, guard))


def scaled_residual(r, sp, threshold=0.0):
    """``c1 r |r|^(k1-1) + c2 r |r|^(k2-1)``, or zeros inside the guard."""
    rn = float(np.linalg.norm(r))
    if rn <= threshold:
        return np.zeros_like(r)
    return (sp.c1 * rn ** (sp.kappa1 - 1.0) + sp.c2 * rn ** (sp.kappa2 - 1.0)) * r


def nominal_field(P, sigma, lam, x):
    if not sigma > 0:
        raise InputError("sigma must be positive")
    return -sigma * residual(P, lam, x)


def modified_field(P, sp, lam, x, guard=RESIDUAL_GUARD):
    x = as_vector(x, P.dim, name="x")
    return -scaled_residual(residual(P, lam, x), sp, guard_threshold(x, guard))


def lyapunov(x, x_star):
    """``V(x) = 0.5 |x - x*|^2``."""
    x = as_vector(x, name="x")
    x_star = as_vector(x_star, x.shape[0], name="x_star")
    d = x - x_star
    return 0.5 * float(d @ d)
