"""Time-integration kernels.

The compiled extension is used when it was built; otherwise, or when
``FLATBEAM_PURE_PYTHON=1`` is set, the numpy/scipy implementation is used.
"""
import os

from . import newmark_py

BACKEND = "python"
run_newmark = newmark_py.run_newmark

if os.environ.get("FLATBEAM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._newmark import run_newmark  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

__all__ = ["run_newmark", "BACKEND", "newmark_py"]
