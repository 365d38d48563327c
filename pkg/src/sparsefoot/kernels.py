"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``SPARSEFOOT_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python implementation is used.
"""

import os

from . import _pykernels

_force_python = os.environ.get("SPARSEFOOT_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

edt_sq = _impl.edt_sq
raycast = _impl.raycast

__all__ = ["BACKEND", "edt_sq", "raycast"]
