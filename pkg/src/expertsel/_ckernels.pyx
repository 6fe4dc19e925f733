# cython: language_level=3
"""Compiled inner loops for candidate scoring over a cell list."""

import numpy as np


def score_candidates(const double[::1] a, const double[::1] b,
                     const double[::1] c, const double[::1] d):
    """Error and false-positive mass of the list after appending each candidate.

    Fuses the two-way split of every cell with the min-sum, so no expanded
    list is materialised.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = c.shape[0]
    err_out = np.empty(n, dtype=np.float64)
    fp_out = np.empty(n, dtype=np.float64)
    cdef double[::1] err = err_out
    cdef double[::1] fp = fp_out
    cdef Py_ssize_t i, j
    cdef double cj, dj, cj0, dj0, x, y, e, f
    with nogil:
        for j in range(n):
            cj = c[j]
            dj = d[j]
            cj0 = 1.0 - cj
            dj0 = 1.0 - dj
            e = 0.0
            f = 0.0
            for i in range(m):
                x = a[i] * cj
                y = b[i] * dj
                if y <= x:
                    e += y
                    f += y
                else:
                    e += x
                x = a[i] * cj0
                y = b[i] * dj0
                if y <= x:
                    e += y
                    f += y
                else:
                    e += x
            err[j] = e
            fp[j] = f
    return err_out, fp_out

