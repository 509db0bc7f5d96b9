"""Pure-numpy fallback for the batched truncated jet product."""

from __future__ import annotations

import numpy as np


def jet_mul(a: np.ndarray, b: np.ndarray, table) -> np.ndarray:
    """Accumulate ``out[it[p]] += a[ia[p]] * b[ib[p]]`` over all product pairs.

    ``table.groups`` lists the pairs grouped by their left index, so that the
    target rows inside a group are distinct and one vectorised update per
    group suffices.  Works for any dtype, including object arrays of exact
    Gaussian rationals.
    """
    npts = max(a.shape[1], b.shape[1])
    if a.dtype == object or b.dtype == object:
        out = np.empty((table.m_out, npts), dtype=object)
        out.fill(0)
    else:
        out = np.zeros((table.m_out, npts), dtype=np.result_type(a.dtype, b.dtype))
    for i, js, ts in table.groups:
        out[ts] += a[i] * b[js]
    return out
