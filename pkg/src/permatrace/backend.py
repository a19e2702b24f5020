"""Kernel backend selection.

The compiled Cython module is preferred; the numpy module is the fallback.
Set PERMATRACE_BACKEND=numpy (or =cython) to force one side, e.g. for the
benchmark or for debugging a miscompiled wheel.
"""

from __future__ import annotations

import os

_requested = os.environ.get("PERMATRACE_BACKEND", "").strip().lower()

if _requested not in ("", "cython", "numpy"):
    raise ImportError(f"PERMATRACE_BACKEND must be 'cython' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import _kernels_np as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _kernels_np as _impl
        BACKEND = "numpy"

rbf_values = _impl.rbf_values
sphere_box_hits = _impl.sphere_box_hits
sphere_cylinder_hits = _impl.sphere_cylinder_hits
sphere_sphere_hits = _impl.sphere_sphere_hits

__all__ = [
    "BACKEND",
    "rbf_values",
    "sphere_box_hits",
    "sphere_cylinder_hits",
    "sphere_sphere_hits",
]
