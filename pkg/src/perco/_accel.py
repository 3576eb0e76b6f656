"""Backend selection for the hot kernels.

Every kernel in :mod:`perco.kernels` exists in two flavours: a numba-compiled
loop and a pure numpy (or plain Python) path. The numba path is used when numba
imports cleanly and ``PERCO_NUMBA`` is not set to ``0``. The switch can also be
flipped at runtime with :func:`set_backend`, which the benchmark and the
backend-equivalence tests rely on.
"""

import os

try:  # pragma: no cover - exercised implicitly
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    numba = None
    NUMBA_AVAILABLE = False

_FALSY = {"0", "false", "no", "off"}

_use_numba = NUMBA_AVAILABLE and os.environ.get("PERCO_NUMBA", "1").lower() not in _FALSY


def use_numba() -> bool:
    return _use_numba


def backend() -> str:
    return "numba" if _use_numba else "numpy"


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _use_numba
    prev = backend()
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    The compiled object keeps the original Python function reachable as
    ``.py_func``, so the numpy backend can still call loop kernels that have
    no vectorised counterpart.
    """
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)

    def wrap(func):
        if NUMBA_AVAILABLE:
            return numba.njit(**kwargs)(func)
        func.py_func = func
        return func

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


def pick(kernel):
    """Return the compiled kernel or its pure-Python body per the active backend."""
    return kernel if _use_numba else kernel.py_func
