# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backend for the row-wise factor solves.

Each row needs a d x d symmetric positive-definite solve (d is small, 5-50),
so the LAPACK call overhead dominates an actual library solve at this size.
A hand-rolled Cholesky keeps the inner loop allocation-free and nogil, which
lets rows run under prange with per-thread scratch.  Row order never affects
results: every row's arithmetic is self-contained and sequential.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from cython.parallel cimport prange, threadid
from libc.math cimport sqrt

cnp.import_array()


cdef inline int _solve_row(double* a, double* b, double* x, int d) noexcept nogil:
    # In-place Cholesky A = L L^T on the lower triangle, then two
    # triangular solves.  Returns 0 on success, 1 if a pivot is not
    # strictly positive (cannot happen while the ridge term is positive).
    cdef int r, c, t
    cdef double s
    for c in range(d):
        s = a[c * d + c]
        for t in range(c):
            s -= a[c * d + t] * a[c * d + t]
        if s <= 0.0:
            return 1
        s = sqrt(s)
        a[c * d + c] = s
        for r in range(c + 1, d):
            x[r] = a[r * d + c]
            for t in range(c):
                x[r] -= a[r * d + t] * a[c * d + t]
            a[r * d + c] = x[r] / s
    # forward solve L y = b (y overwrites b)
    for r in range(d):
        s = b[r]
        for t in range(r):
            s -= a[r * d + t] * b[t]
        b[r] = s / a[r * d + r]
    # back solve L^T x = y (x overwrites b)
    for r in range(d - 1, -1, -1):
        s = b[r]
        for t in range(r + 1, d):
            s -= a[t * d + r] * b[t]
        b[r] = s / a[r * d + r]
    return 0


def solve_factors(indptr, indices, values, other, double ridge, rhs_base, out, int n_threads=1):
    """Compiled twin of ``_factor_numpy.solve_factors`` (same contract)."""
    cdef cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] va = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[:, ::1] ot = other
    cdef double[:, ::1] ou = out
    cdef double[:, ::1] rb
    cdef int has_rhs = rhs_base is not None
    if has_rhs:
        rb = rhs_base
    else:
        rb = np.zeros((1, 1))

    cdef int d = ot.shape[1]
    cdef Py_ssize_t n_rows = ip.shape[0] - 1
    cdef int nt = n_threads if n_threads > 0 else 1
    if nt > n_rows and n_rows > 0:
        nt = <int> n_rows

    # per-thread scratch: packed A (d*d), solve workspace (d)
    cdef double[:, ::1] scratch_a = np.empty((nt, d * d), dtype=np.float64)
    cdef double[:, ::1] scratch_w = np.empty((nt, d), dtype=np.float64)
    cdef cnp.int64_t[::1] fail = np.zeros(nt, dtype=np.int64)

    cdef Py_ssize_t j, t
    cdef cnp.int64_t k
    cdef int tid, r, c
    cdef double xv, vr
    cdef double* a
    cdef double* w
    cdef const double* v

    with nogil:
        for j in prange(n_rows, num_threads=nt, schedule="static"):
            tid = threadid()
            a = &scratch_a[tid, 0]
            w = &scratch_w[tid, 0]
            for r in range(d):
                for c in range(d):
                    a[r * d + c] = 0.0
            if has_rhs:
                for r in range(d):
                    ou[j, r] = rb[j, r]
            else:
                for r in range(d):
                    ou[j, r] = 0.0
            for t in range(ip[j], ip[j + 1]):
                k = ix[t]
                xv = va[t]
                v = &ot[k, 0]
                for r in range(d):
                    vr = v[r]
                    ou[j, r] += xv * vr
                    for c in range(r + 1):
                        a[r * d + c] += vr * v[c]
            for r in range(d):
                a[r * d + r] += ridge
            if _solve_row(a, &ou[j, 0], w, d) != 0:
                fail[tid] = 1

    if np.any(np.asarray(fail)):
        raise FloatingPointError("factor system lost positive definiteness")
    return np.asarray(ou)
