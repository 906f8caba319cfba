"""Backend selection for the compiled kernels.

The solver loops have two implementations: numba-compiled kernels working on
packed arrays (``kernels.py``) and a pure numpy path that calls the operator
oracles directly. The default is ``numba`` when it imports; set
``FXTSPLIT_BACKEND=numpy`` to force the fallback.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def default_backend():
    name = os.environ.get("FXTSPLIT_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"FXTSPLIT_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or a no-op decorator without numba."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
