"""Hot inner loops with two interchangeable backends.

``ROWBENCH_BACKEND=numba`` (default) uses the ``@njit`` kernels;
``ROWBENCH_BACKEND=numpy`` forces the vectorised fallback. When numba is
not importable the fallback is used regardless. Both backends produce
bit-identical results.
"""

import functools
import importlib
import os

from . import _numpy

BACKEND_ENV = "ROWBENCH_BACKEND"


@functools.lru_cache(maxsize=None)
def _numba_module():
    # imported on first use: numba itself costs a few hundred ms at startup
    try:
        return importlib.import_module(f"{__name__}._numba")
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None


def available_backends():
    return ("numba", "numpy") if _numba_module() is not None else ("numpy",)


def get_backend(name=None):
    """Kernel module for ``name`` (or the environment default)."""
    name = (name or os.environ.get(BACKEND_ENV, "numba")).strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and _numba_module() is not None:
        return _numba_module()
    return _numpy


def backend_name(module=None):
    module = module or get_backend()
    return "numpy" if module is _numpy else "numba"
