"""numba kernels for the solver loops.

Catalog operators are packed into a flat tuple
``(kind, K, k, a, b, s, lam, M, q)``:

* ``B(x) = M x + q`` (every catalog forward operator is affine),
* ``J(y)`` by ``kind``: LINEAR ``K y + k``; BOX clamp to ``[a, b]``;
  BALL center ``a`` radius ``s``; HALFSPACE ``<a, y> <= s``;
  L1 soft threshold at ``s``.

``pack`` returns ``None`` for anything holding a user oracle; callers then
take the numpy path in :mod:`fxtsplit.dynamics`.
"""

import numpy as np

from ._accel import njit

LINEAR, BOX, BALL, HALFSPACE, L1 = 0, 1, 2, 3, 4

MODE_NOMINAL, MODE_MODIFIED = 0, 1
CONVERGED, MAX_STEPS, DIVERGED = 0, 1, 2
STATUS_NAMES = ("converged", "max_steps", "diverged")


def _pack_resolvent(A, lam, n):
    form = A.form
    if form is None:
        return None
    eye = np.eye(n)
    zero = np.zeros(n)
    if form[0] == "linear":
        _, G, h = form
        K = np.linalg.inv(eye + lam * G)
        return LINEAR, K, -lam * (K @ h), zero, zero, 0.0
    if form[0] == "project":
        C = form[1]
        if C.kind == "box":
            return BOX, eye, zero, np.array(C.lower), np.array(C.upper), 0.0
        if C.kind == "ball":
            return BALL, eye, zero, np.array(C.center), zero, float(C.radius)
        if C.kind == "halfspace":
            return HALFSPACE, eye, zero, np.array(C.normal), zero, float(C.offset)
        if C.kind == "affine_subspace":
            return LINEAR, np.array(C._proj_matrix), np.array(C._proj_offset), zero, zero, 0.0
        return LINEAR, eye, zero, zero, zero, 0.0
    if form[0] == "prox":
        f = form[1]
        if f.kind == "zero":
            return LINEAR, eye, zero, zero, zero, 0.0
        if f.kind == "l1_norm":
            return L1, eye, zero, zero, zero, lam * f.weight
        if f.kind == "quadratic":
            K = np.linalg.inv(eye + lam * f.Q)
            return LINEAR, K, lam * (K @ f.b), zero, zero, 0.0
        if f.kind == "affine":
            return LINEAR, eye, -lam * np.array(f.c), zero, zero, 0.0
    return None


def pack(P, lam):
    """Flatten a catalog instance at ``lam`` for the kernels, or ``None``."""
    n = P.dim
    if P.B.form is None or P.B.form[0] != "affine":
        return None
    res = _pack_resolvent(P.A, float(lam), n)
    if res is None:
        return None
    kind, K, k, a, b, s = res
    _, M, q = P.B.form
    arr = lambda v: np.ascontiguousarray(v, dtype=np.float64)
    return (np.int64(kind), arr(K), arr(k), arr(a), arr(b), float(s), float(lam), arr(M), arr(q))


@njit
def _norm(v):
    acc = 0.0
    for i in range(v.shape[0]):
        acc += v[i] * v[i]
    return np.sqrt(acc)


@njit
def _matvec(M, x):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += M[i, j] * x[j]
        out[i] = acc
    return out


@njit
def _resolvent(y, kind, K, k, a, b, s):
    n = y.shape[0]
    if kind == LINEAR:
        z = _matvec(K, y)
        for i in range(n):
            z[i] += k[i]
        return z
    z = y.copy()
    if kind == BOX:
        for i in range(n):
            if z[i] < a[i]:
                z[i] = a[i]
            elif z[i] > b[i]:
                z[i] = b[i]
    elif kind == BALL:
        d = y - a
        nd = _norm(d)
        if nd > s:
            z = a + (s / nd) * d
    elif kind == HALFSPACE:
        excess = -s
        aa = 0.0
        for i in range(n):
            excess += a[i] * y[i]
            aa += a[i] * a[i]
        if excess > 0:
            z = y - (excess / aa) * a
    elif kind == L1:
        for i in range(n):
            m = abs(y[i]) - s
            if m <= 0.0:
                z[i] = 0.0
            else:
                z[i] = np.sign(y[i]) * m
    return z


@njit
def fb_map(x, pk):
    kind, K, k, a, b, s, lam, M, q = pk
    Bx = _matvec(M, x)
    y = np.empty_like(x)
    for i in range(x.shape[0]):
        y[i] = x[i] - lam * (Bx[i] + q[i])
    return _resolvent(y, kind, K, k, a, b, s)


@njit
def _field(x, pk, mode, sigma, c1, c2, k1, k2, guard):
    r = x - fb_map(x, pk)
    if mode == MODE_NOMINAL:
        return -sigma * r
    rn = _norm(r)
    if rn <= guard * (1.0 + _norm(x)):
        return np.zeros_like(x)
    return -(c1 * rn ** (k1 - 1.0) + c2 * rn ** (k2 - 1.0)) * r


@njit
def fixed_point_loop(x0, pk, tol, max_iter, record):
    n = x0.shape[0]
    cap = min(max_iter + 1, _INITIAL_ROWS)
    hist = np.empty((cap if record else 0, n))
    x = x0.copy()
    rn = np.inf
    it = 0
    while True:
        if record:
            if it == cap:
                cap = min(2 * cap, max_iter + 1)
                hist = _grow_rows(hist, cap)
            hist[it] = x
        t = fb_map(x, pk)
        rn = _norm(x - t)
        if rn <= tol or it == max_iter or not np.isfinite(rn):
            break
        x = t
        it += 1
    return x, rn, it, hist[: it + 1] if record else hist


# traces start small and double, so long horizons only pay for the rows they use
_INITIAL_ROWS = 4096


@njit
def _grow(a, cap):
    out = np.empty(cap)
    out[: a.shape[0]] = a
    return out


@njit
def _grow_rows(a, cap):
    out = np.empty((cap, a.shape[1]))
    out[: a.shape[0]] = a
    return out


@njit
def _record(k, x, rn, phi, xstar, has_xstar, res, lyap, phis, dist, its, record):
    res[k] = rn
    phis[k] = phi
    if has_xstar:
        d = _norm(x - xstar)
        dist[k] = d
        lyap[k] = 0.5 * d * d
    else:
        dist[k] = np.nan
        lyap[k] = np.nan
    if record:
        its[k] = x


@njit
def euler_loop(x0, pk, mode, gain, sigma, c1, c2, k1, k2, guard, xstar, has_xstar,
               tol, max_steps, diverge_factor, record):
    """Forward-Euler on either field.

    ``mode == MODE_NOMINAL``: ``x <- (1 - gain) x + gain T(x)`` with
    ``gain = gamma*sigma``. ``MODE_MODIFIED``: ``x <- x - gain phi(x) r(x)``
    with ``gain = gamma``.
    """
    n = x0.shape[0]
    cap = min(max_steps + 1, _INITIAL_ROWS)
    res = np.empty(cap)
    lyap = np.empty(cap)
    phis = np.empty(cap)
    dist = np.empty(cap)
    its = np.empty((cap if record else 0, n))
    x = x0.copy()
    r0 = 0.0
    status = MAX_STEPS
    k = 0
    while True:
        t = fb_map(x, pk)
        r = x - t
        rn = _norm(r)
        if mode == MODE_NOMINAL:
            phi = sigma
        elif rn <= guard * (1.0 + _norm(x)):
            phi = 0.0
        else:
            phi = c1 * rn ** (k1 - 1.0) + c2 * rn ** (k2 - 1.0)
        if k == cap:
            cap = min(2 * cap, max_steps + 1)
            res, lyap, phis, dist = _grow(res, cap), _grow(lyap, cap), _grow(phis, cap), _grow(dist, cap)
            if record:
                its = _grow_rows(its, cap)
        _record(k, x, rn, phi, xstar, has_xstar, res, lyap, phis, dist, its, record)
        if k == 0:
            r0 = max(rn, 1e-300)
        if rn <= tol:
            status = CONVERGED
            break
        if not np.isfinite(rn) or rn > diverge_factor * r0:
            status = DIVERGED
            break
        if k == max_steps:
            break
        if mode == MODE_NOMINAL:
            x = (1.0 - gain) * x + gain * t
        else:
            x = x - (gain * phi) * r
        k += 1
    return res[: k + 1], lyap[: k + 1], phis[: k + 1], dist[: k + 1], its[: k + 1], x, status


@njit
def rk4_loop(x0, pk, mode, sigma, c1, c2, k1, k2, guard, dt, xstar, has_xstar,
             tol, max_steps, diverge_factor, record):
    n = x0.shape[0]
    cap = min(max_steps + 1, _INITIAL_ROWS)
    res = np.empty(cap)
    lyap = np.empty(cap)
    phis = np.empty(cap)
    dist = np.empty(cap)
    its = np.empty((cap if record else 0, n))
    x = x0.copy()
    r0 = 0.0
    status = MAX_STEPS
    k = 0
    while True:
        r = x - fb_map(x, pk)
        rn = _norm(r)
        if mode == MODE_NOMINAL:
            phi = sigma
        elif rn <= guard * (1.0 + _norm(x)):
            phi = 0.0
        else:
            phi = c1 * rn ** (k1 - 1.0) + c2 * rn ** (k2 - 1.0)
        if k == cap:
            cap = min(2 * cap, max_steps + 1)
            res, lyap, phis, dist = _grow(res, cap), _grow(lyap, cap), _grow(phis, cap), _grow(dist, cap)
            if record:
                its = _grow_rows(its, cap)
        _record(k, x, rn, phi, xstar, has_xstar, res, lyap, phis, dist, its, record)
        if k == 0:
            r0 = max(rn, 1e-300)
        if rn <= tol:
            status = CONVERGED
            break
        if not np.isfinite(rn) or rn > diverge_factor * r0:
            status = DIVERGED
            break
        if k == max_steps:
            break
        f1 = _field(x, pk, mode, sigma, c1, c2, k1, k2, guard)
        f2 = _field(x + 0.5 * dt * f1, pk, mode, sigma, c1, c2, k1, k2, guard)
        f3 = _field(x + 0.5 * dt * f2, pk, mode, sigma, c1, c2, k1, k2, guard)
        f4 = _field(x + dt * f3, pk, mode, sigma, c1, c2, k1, k2, guard)
        x = x + (dt / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        k += 1
    return res[: k + 1], lyap[: k + 1], phis[: k + 1], dist[: k + 1], its[: k + 1], x, status
