"""Backend selection for the Gauss-Seidel kernel.

The compiled extension is used when importable; ``CTETRIS_PURE_PYTHON=1``
forces the fallback.
"""
import os

from . import _gs_py

BACKENDS = {"python": _gs_py.gauss_seidel_sweep}

try:
    from . import _gs_ext
except ImportError:  # extension not built
    _gs_ext = None
else:
    BACKENDS["cython"] = _gs_ext.gauss_seidel_sweep

if os.environ.get("CTETRIS_PURE_PYTHON") or "cython" not in BACKENDS:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_sweep(backend=None):
    name = backend or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}") from None
