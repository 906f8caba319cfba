"""Operator specs and the closed-form catalog.

``A`` (set-valued) is only ever touched through its resolvent, so a
:class:`MaximalOperator` is a resolvent oracle plus a monotonicity modulus.
``B`` (single-valued) is an evaluation oracle plus ``(mu, L)`` and an optional
cocoercivity constant. Catalog constructors (``normal_cone``,
``subdifferential``, ``linear_operator``, ``linear_forward`` ...) wire the
closed forms and keep a ``form`` tag that the compiled kernels can pack.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    IllPosedParameterError,
    InputError,
    InvalidSpecError,
    OperatorEvaluationError,
)

# slack used when validating declared constants against each other
_REL_SLACK = 1e-12


def as_vector(y, dim=None, name="vector"):
    """Convert to a finite 1-D float64 array, checking ``dim`` if given."""
    v = np.asarray(y, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InputError(f"{name} has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} contains NaN or Inf")
    return v


def _as_matrix(m, name="matrix"):
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise InvalidSpecError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidSpecError(f"{name} contains NaN or Inf")
    return a


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# convex sets


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """Nonempty closed convex set of one of the closed-form kinds.

    Build through the classmethods; each validates its own parameters.
    """

    kind: str
    dim: int
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    normal: Optional[np.ndarray] = None
    offset: float = 0.0
    matrix: Optional[np.ndarray] = None
    rhs: Optional[np.ndarray] = None
    # affine subspace: x -> P x + p0
    _proj_matrix: Optional[np.ndarray] = field(default=None, repr=False)
    _proj_offset: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def box(cls, lower, upper):
        lo = as_vector(lower, name="lower")
        hi = as_vector(upper, dim=lo.shape[0], name="upper")
        if np.any(lo > hi):
            raise InvalidSpecError("box requires lower <= upper componentwise")
        return cls("box", lo.shape[0], lower=_frozen(lo), upper=_frozen(hi))

    @classmethod
    def ball(cls, center, radius):
        c = as_vector(center, name="center")
        radius = float(radius)
        if not np.isfinite(radius) or radius < 0:
            raise InvalidSpecError("ball requires a finite radius >= 0")
        return cls("ball", c.shape[0], center=_frozen(c), radius=radius)

    @classmethod
    def halfspace(cls, normal, offset):
        """``{x : <normal, x> <= offset}``"""
        a = as_vector(normal, name="normal")
        if not np.any(a != 0):
            raise InvalidSpecError("halfspace normal must be nonzero")
        offset = float(offset)
        if not np.isfinite(offset):
            raise InvalidSpecError("halfspace offset must be finite")
        return cls("halfspace", a.shape[0], normal=_frozen(a), offset=offset)

    @classmethod
    def affine_subspace(cls, matrix, rhs):
        """``{x : matrix @ x = rhs}``; must be nonempty."""
        A = _as_matrix(matrix, "affine matrix")
        b = as_vector(rhs, dim=A.shape[0], name="rhs")
        pinv = np.linalg.pinv(A)
        p0 = pinv @ b
        if np.linalg.norm(A @ p0 - b) > 1e-9 * (1.0 + np.linalg.norm(b)):
            raise InvalidSpecError("affine subspace is empty (rhs not in the range of matrix)")
        P = np.eye(A.shape[1]) - pinv @ A
        return cls(
            "affine_subspace",
            A.shape[1],
            matrix=_frozen(A),
            rhs=_frozen(b),
            _proj_matrix=_frozen(P),
            _proj_offset=_frozen(p0),
        )

    @classmethod
    def whole_space(cls, dim):
        dim = int(dim)
        if dim <= 0:
            raise InvalidSpecError("dimension must be positive")
        return cls("whole_space", dim)

    def project(self, y):
        y = as_vector(y, self.dim, name="point")
        if self.kind == "box":
            return np.minimum(np.maximum(y, self.lower), self.upper)
        if self.kind == "ball":
            d = y - self.center
            n = np.linalg.norm(d)
            if n <= self.radius:
                return y.copy()
            return self.center + (self.radius / n) * d
        if self.kind == "halfspace":
            a = self.normal
            excess = a @ y - self.offset
            if excess <= 0:
                return y.copy()
            return y - (excess / (a @ a)) * a
        if self.kind == "affine_subspace":
            return self._proj_matrix @ y + self._proj_offset
        return y.copy()

    def contains(self, x, tol=1e-12):
        x = as_vector(x, self.dim, name="point")
        return bool(np.linalg.norm(self.project(x) - x) <= tol * (1.0 + np.linalg.norm(x)))

    def bounding_box(self):
        """(lower, upper) of a bounding box, or None when the set is unbounded."""
        if self.kind == "box":
            return self.lower, self.upper
        if self.kind == "ball":
            return self.center - self.radius, self.center + self.radius
        return None


def project(C, y):
    """Euclidean projection of ``y`` onto ``C``."""
    return C.project(y)


# --------------------------------------------------------------------------
# functions with closed-form prox

_FUNCTION_KINDS = ("zero", "l1_norm", "quadratic", "indicator", "affine")


@dataclass(frozen=True, eq=False)
class Function:
    """A function from the closed-form catalog.

    ``quadratic`` means ``0.5 x'Qx - b'x`` (Q symmetrized on ingestion);
    ``affine`` means ``c'x``.
    """

    kind: str
    dim: Optional[int] = None
    weight: float = 0.0
    Q: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    set: Optional[ConvexSet] = None
    c: Optional[np.ndarray] = None

    @classmethod
    def zero(cls, dim=None):
        return cls("zero", dim=None if dim is None else int(dim))

    @classmethod
    def l1_norm(cls, weight=1.0, dim=None):
        weight = float(weight)
        if not np.isfinite(weight) or weight < 0:
            raise InvalidSpecError("l1 weight must be finite and >= 0")
        return cls("l1_norm", dim=None if dim is None else int(dim), weight=weight)

    @classmethod
    def quadratic(cls, Q, b=None):
        Q = _as_matrix(Q, "Q")
        if Q.shape[0] != Q.shape[1]:
            raise InvalidSpecError(f"Q must be square, got {Q.shape}")
        n = Q.shape[0]
        b = np.zeros(n) if b is None else as_vector(b, n, name="b")
        return cls("quadratic", dim=n, Q=_frozen(0.5 * (Q + Q.T)), b=_frozen(b))

    @classmethod
    def indicator(cls, C):
        if not isinstance(C, ConvexSet):
            raise InvalidSpecError("indicator needs a ConvexSet")
        return cls("indicator", dim=C.dim, set=C)

    @classmethod
    def affine(cls, c):
        c = as_vector(c, name="c")
        return cls("affine", dim=c.shape[0], c=_frozen(c))

    def _check(self, x):
        return as_vector(x, self.dim, name="point")

    def value(self, x):
        x = self._check(x)
        if self.kind == "zero":
            return 0.0
        if self.kind == "l1_norm":
            return self.weight * float(np.abs(x).sum())
        if self.kind == "quadratic":
            return float(0.5 * x @ self.Q @ x - self.b @ x)
        if self.kind == "indicator":
            return 0.0 if self.set.contains(x, tol=1e-10) else np.inf
        return float(self.c @ x)

    @property
    def differentiable(self):
        return self.kind in ("zero", "quadratic", "affine")

    def gradient(self, x):
        x = self._check(x)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "quadratic":
            return self.Q @ x - self.b
        if self.kind == "affine":
            return self.c.copy()
        raise InvalidSpecError(f"{self.kind} has no gradient")

    def prox(self, lam, y):
        lam = float(lam)
        if not lam > 0:
            raise InputError("prox parameter must be positive")
        y = self._check(y)
        if self.kind == "zero":
            return y.copy()
        if self.kind == "l1_norm":
            t = lam * self.weight
            return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)
        if self.kind == "quadratic":
            K = np.eye(self.dim) + lam * self.Q
            try:
                z = np.linalg.solve(K, y + lam * self.b)
            except np.linalg.LinAlgError as exc:
                raise IllPosedParameterError(
                    f"I + lambda*Q is singular at lambda={lam}"
                ) from exc
            if not np.all(np.isfinite(z)):
                raise IllPosedParameterError(f"I + lambda*Q is singular at lambda={lam}")
            return z
        if self.kind == "indicator":
            return self.set.project(y)
        return y - lam * self.c

    @property
    def modulus(self):
        """Monotonicity modulus of the subdifferential."""
        if self.kind == "quadratic":
            return float(np.linalg.eigvalsh(self.Q)[0])
        return 0.0


def prox(f, lam, y):
    """``argmin_z f(z) + |z - y|^2 / (2 lam)``."""
    return f.prox(lam, y)


# --------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class MaximalOperator:
    """Maximal ``mu``-monotone ``A`` given by its resolvent oracle.

    ``resolvent_oracle(lam, y)`` must return ``(Id + lam A)^{-1} y``.
    ``form`` tags catalog operators for the compiled kernels; user oracles
    leave it ``None`` and always run on the numpy path.
    """

    resolvent_oracle: Callable
    mu: float
    dim: Optional[int] = None
    name: str = "custom"
    form: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise InvalidSpecError("mu_A must be finite")


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    """Single-valued ``B`` with declared modulus ``mu`` and Lipschitz constant ``L``."""

    func: Callable
    mu: float
    L: float
    beta: Optional[float] = None
    dim: Optional[int] = None
    name: str = "custom"
    form: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.L)):
            raise InvalidSpecError("mu_B and L must be finite")
        if self.L < 0:
            raise InvalidSpecError("Lipschitz constant must be >= 0")
        # <Bx-By, x-y> <= |Bx-By||x-y| <= L|x-y|^2, so mu_B <= L for any valid B.
        if self.mu > self.L * (1 + _REL_SLACK) + _REL_SLACK:
            raise InvalidSpecError(f"mu_B={self.mu} exceeds L={self.L}; no operator has both")
        if self.beta is not None:
            if not self.beta >= 0:
                raise InvalidSpecError("cocoercivity constant must be >= 0")
            if self.beta > 0 and self.L > (1.0 / self.beta) * (1 + _REL_SLACK):
                raise InvalidSpecError(
                    f"beta-cocoercive B is 1/beta-Lipschitz; L={self.L} > 1/beta={1 / self.beta}"
                )


def resolvent(A, lam, y):
    """``J_{lam A}(y)``; requires ``1 + lam*mu_A > 0``."""
    lam = float(lam)
    if not lam > 0:
        raise IllPosedParameterError("resolvent parameter must be positive")
    if not 1.0 + lam * A.mu > 0:
        raise IllPosedParameterError(
            f"1 + lambda*mu_A = {1.0 + lam * A.mu:.6g} <= 0; resolvent need not be single-valued"
        )
    y = as_vector(y, A.dim, name="point")
    z = np.asarray(A.resolvent_oracle(lam, y), dtype=np.float64)
    if z.shape != y.shape or not np.all(np.isfinite(z)):
        raise OperatorEvaluationError(f"resolvent of {A.name} returned an invalid value")
    return z


def evaluate_forward(B, x):
    x = as_vector(x, B.dim, name="point")
    out = np.asarray(B.func(x), dtype=np.float64)
    if out.shape != x.shape:
        raise OperatorEvaluationError(
            f"{B.name} returned shape {out.shape} for input of shape {x.shape}"
        )
    if not np.all(np.isfinite(out)):
        raise OperatorEvaluationError(f"{B.name} returned NaN or Inf")
    return out


# catalog: A


def linear_operator(G, h=None, mu=None, name="linear"):
    """``A(x) = G x + h``; resolvent ``(I + lam G)^{-1}(y - lam h)``."""
    G = _as_matrix(G, "G")
    n = G.shape[0]
    if G.shape != (n, n):
        raise InvalidSpecError("G must be square")
    h = np.zeros(n) if h is None else as_vector(h, n, name="h")
    G, h = _frozen(G), _frozen(h)
    if mu is None:
        mu = matrix_moduli(G).mu

    def oracle(lam, y):
        return np.linalg.solve(np.eye(n) + lam * G, y - lam * h)

    return MaximalOperator(oracle, float(mu), n, name, form=("linear", G, h))


def scaled_identity(kappa, dim):
    """``A = kappa * Id``; ``kappa`` may be negative (weakly monotone)."""
    dim = int(dim)
    kappa = float(kappa)

    def oracle(lam, y):
        return y / (1.0 + lam * kappa)

    G = _frozen(kappa * np.eye(dim))
    return MaximalOperator(
        oracle, kappa, dim, f"{kappa:g}*Id", form=("linear", G, _frozen(np.zeros(dim)))
    )


def zero_operator(dim):
    dim = int(dim)
    return MaximalOperator(
        lambda lam, y: y.copy(),
        0.0,
        dim,
        "zero",
        form=("linear", _frozen(np.zeros((dim, dim))), _frozen(np.zeros(dim))),
    )


def normal_cone(C):
    """``A = N_C``; resolvent is the projection for every lambda."""
    return MaximalOperator(lambda lam, y: C.project(y), 0.0, C.dim, f"N_{C.kind}", form=("project", C))


def subdifferential(f, dim=None):
    """``A = grad/subdifferential of f``; resolvent is ``prox_{lam f}``."""
    dim = f.dim if f.dim is not None else dim
    if f.kind == "indicator":
        return normal_cone(f.set)
    return MaximalOperator(
        lambda lam, y: f.prox(lam, y),
        f.modulus,
        None if dim is None else int(dim),
        f"d{f.kind}",
        form=("prox", f),
    )


# catalog: B


def linear_forward(M, q=None, mu=None, L=None, beta=None, name="affine"):
    """``B(x) = M x + q`` with moduli from :func:`matrix_moduli` unless declared."""
    M = _as_matrix(M, "M")
    n = M.shape[0]
    if M.shape != (n, n):
        raise InvalidSpecError("M must be square")
    q = np.zeros(n) if q is None else as_vector(q, n, name="q")
    M, q = _frozen(M), _frozen(q)
    if mu is None or L is None:
        m = matrix_moduli(M)
        mu = m.mu if mu is None else mu
        L = m.L if L is None else L

    def func(x):
        return M @ x + q

    return ForwardOperator(func, float(mu), float(L), beta, n, name, form=("affine", M, q))


def identity_forward(dim):
    return linear_forward(np.eye(int(dim)), name="Id")


def zero_forward(dim):
    dim = int(dim)
    return linear_forward(np.zeros((dim, dim)), mu=0.0, L=0.0, name="zero")


def gradient_forward(f, mu=None, L=None, beta=None):
    """``B = grad f`` for the differentiable catalog kinds."""
    if f.kind == "quadratic":
        return linear_forward(f.Q, -f.b, mu=mu, L=L, beta=beta, name="grad quadratic")
    if f.kind == "affine":
        n = f.dim
        return linear_forward(np.zeros((n, n)), f.c, mu=0.0 if mu is None else mu,
                              L=0.0 if L is None else L, beta=beta, name="grad affine")
    if f.kind == "zero":
        if f.dim is None:
            raise InvalidSpecError("zero function needs a dimension to build its gradient")
        return zero_forward(f.dim)
    raise InvalidSpecError(f"{f.kind} is not differentiable")


# --------------------------------------------------------------------------
# moduli


class Moduli(NamedTuple):
    mu: float
    L: float
    estimated: bool = False


def matrix_moduli(M):
    M = _as_matrix(M)
    sym = 0.5 * (M + M.T)
    mu = float(np.linalg.eigvalsh(sym)[0])
    L = float(np.linalg.norm(M, 2)) if M.size else 0.0
    return Moduli(mu, L, False)


def moduli_of(spec, samples=None, rng=None, dim=None, scale=1.0):
    """Monotonicity modulus and Lipschitz constant of a linear map or a gradient.

    Closed form for matrices, quadratic/affine/zero functions and affine
    forward operators. Anything else is estimated from ``samples`` random
    pairs; the sampled modulus is an upper estimate and the sampled Lipschitz
    constant a lower estimate of the true values.
    """
    if isinstance(spec, Function):
        if spec.kind == "quadratic":
            return matrix_moduli(spec.Q)
        if spec.kind in ("affine", "zero"):
            return Moduli(0.0, 0.0, False)
        raise InvalidSpecError(f"{spec.kind} has no gradient moduli")
    if isinstance(spec, ForwardOperator):
        if spec.form is not None and spec.form[0] == "affine":
            return matrix_moduli(spec.form[1])
        func, dim = spec.func, spec.dim if spec.dim is not None else dim
    elif callable(spec):
        func = spec
    else:
        return matrix_moduli(spec)

    if samples is None or dim is None:
        raise InputError("empirical moduli need a sample count and a dimension")
    rng = np.random.default_rng(rng)
    mu_est, L_est = np.inf, 0.0
    for _ in range(int(samples)):
        x = scale * rng.standard_normal(dim)
        y = scale * rng.standard_normal(dim)
        d = x - y
        nd2 = d @ d
        if nd2 == 0:
            continue
        g = np.asarray(func(x), dtype=np.float64) - np.asarray(func(y), dtype=np.float64)
        mu_est = min(mu_est, (g @ d) / nd2)
        L_est = max(L_est, np.linalg.norm(g) / np.sqrt(nd2))
    return Moduli(float(mu_est), float(L_est), True)
