"""Backend selection for the iteration loop.

The compiled Cython kernel is used when it was built and importable; set
``RVSM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
advance = _pykernels.advance

if os.environ.get("RVSM_PURE_PYTHON") != "1":
    try:
        from . import _kernels
    except ImportError:  # extension not built
        _kernels = None
    if _kernels is not None:
        advance = _kernels.advance
        BACKEND = "cython"


def get_advance(backend=None):
    """Return the ``advance`` implementation for ``backend`` ("cython", "python" or current)."""
    if backend is None:
        return advance
    if backend == "python":
        return _pykernels.advance
    if backend == "cython":
        from . import _kernels as compiled
        return compiled.advance
    raise ValueError(f"unknown backend {backend!r}")


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
