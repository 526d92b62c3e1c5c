"""Backend selection for the hot kernels.

The compiled Cython extension ``cavmagic._kernels`` is used when it was
built; otherwise the numpy implementation in ``cavmagic._kernels_py`` is
used. Setting ``CAVMAGIC_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

_FORCE_PURE = os.environ.get("CAVMAGIC_PURE_PYTHON", "").strip() not in ("", "0")

if _FORCE_PURE:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

cloud_sums = _impl.cloud_sums
photon_map = _impl.photon_map
ridge_scan = _impl.ridge_scan


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


__all__ = ["BACKEND", "cloud_sums", "photon_map", "ridge_scan", "compiled_available"]
