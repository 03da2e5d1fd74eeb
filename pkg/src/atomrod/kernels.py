"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is numerically interchangeable.  Set ATOMROD_FORCE_NUMPY=1 to skip
the extension (used by tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("ATOMROD_FORCE_NUMPY", "") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _springs as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
cell_spring_energy = _impl.cell_spring_energy

__all__ = ["BACKEND", "cell_spring_energy", "numpy_backend"]


def numpy_backend():
    """The numpy implementation, regardless of the selected backend."""
    return _kernels_py
