"""JIT backend selection.

Hot loops are written once as plain functions over primitive numpy arrays and
wrapped with numba's njit when the "numba" backend is active.  Setting
POWSIM_BACKEND=python (or running without numba installed) executes the very
same bytecode uninterpreted by numba, so both paths produce identical event
orderings and integer results.
"""

import os

_BACKEND = os.environ.get("POWSIM_BACKEND", "").strip().lower()

if _BACKEND not in ("", "numba", "python"):
    raise RuntimeError(f"POWSIM_BACKEND must be 'numba' or 'python', got {_BACKEND!r}")

if _BACKEND != "python":
    try:
        from numba import njit as _njit
        _HAVE_NUMBA = True
    except ImportError:
        if _BACKEND == "numba":
            raise
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA


def backend_name() -> str:
    return "numba" if USE_NUMBA else "python"


def maybe_njit(func=None, **kwargs):
    """@njit under the numba backend, identity function otherwise."""
    def wrap(f):
        if USE_NUMBA:
            kwargs.setdefault("cache", True)
            return _njit(**kwargs)(f)
        return f
    if func is not None:
        return wrap(func)
    return wrap
