"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set the environment variable ``FEDOSOV_BT_PURE=1`` before import to force the
fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _jetkernel_py

try:
    if os.environ.get("FEDOSOV_BT_PURE", "") not in ("", "0"):
        raise ImportError("pure-python kernels requested")
    from . import _jetkernel as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["compiled", "python"] if _compiled is not None else ["python"]


def jet_mul(a: np.ndarray, b: np.ndarray, table, backend: str | None = None) -> np.ndarray:
    """Batched truncated jet product through the selected backend.

    Complex128 inputs go to the compiled kernel when it is available; object
    arrays (exact mode) always use the numpy fallback.
    """
    use = backend or BACKEND
    if (
        use == "compiled"
        and _compiled is not None
        and a.dtype == np.complex128
        and b.dtype == np.complex128
    ):
        npts = max(a.shape[1], b.shape[1])
        if a.shape[1] != npts:
            a = np.broadcast_to(a, (a.shape[0], npts))
        if b.shape[1] != npts:
            b = np.broadcast_to(b, (b.shape[0], npts))
        return _compiled.jet_mul_pairs(
            np.ascontiguousarray(a), np.ascontiguousarray(b), table.ia, table.ib, table.it, table.m_out
        )
    return _jetkernel_py.jet_mul(a, b, table)
