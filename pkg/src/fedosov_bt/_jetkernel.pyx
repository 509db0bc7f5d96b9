# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the batched truncated jet product."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def jet_mul_pairs(const double complex[:, ::1] a, const double complex[:, ::1] b,
                  const int[::1] ia, const int[::1] ib, const int[::1] it, int m_out):
    """Accumulate ``out[it[p]] += a[ia[p]] * b[ib[p]]`` over all product pairs.

    Rows index jet coefficients, columns index batch points; ``a`` and ``b``
    must have the same number of columns.
    """
    cdef Py_ssize_t npts = a.shape[1]
    cdef Py_ssize_t npairs = ia.shape[0]
    cdef Py_ssize_t p, q
    cdef int i, j, t
    out = np.zeros((m_out, npts), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for p in range(npairs):
            i = ia[p]
            j = ib[p]
            t = it[p]
            for q in range(npts):
                o[t, q] = o[t, q] + a[i, q] * b[j, q]
    return out
