"""Pure-numpy backend for the row-wise factor solves.

Reference implementation of the kernel contract; the compiled backend in
``_factor_core`` computes the same quantities.  Kept dependency-free so the
package works on installs where the extension failed to build.
"""

import numpy as np


def solve_factors(indptr, indices, values, other, ridge, rhs_base, out, n_threads=1):
    """Solve one small ridge system per row, writing results into ``out``.

    For row j with observed entries t in [indptr[j], indptr[j+1]):

        A_j = ridge * I + sum_t other[indices[t]] outer other[indices[t]]
        b_j = (rhs_base[j] if rhs_base is not None else 0)
              + sum_t values[t] * other[indices[t]]
        out[j] = solve(A_j, b_j)

    ``other`` is (n, d) row-major, ``out`` is (n_rows, d).  ``n_threads`` is
    part of the shared signature; this backend always runs serially, which is
    valid because the contract requires results independent of thread count.
    """
    d = other.shape[1]
    eye = np.eye(d)
    n_rows = len(indptr) - 1
    for j in range(n_rows):
        lo = indptr[j]
        hi = indptr[j + 1]
        if lo == hi:
            if rhs_base is None:
                out[j] = 0.0
            else:
                out[j] = rhs_base[j] / ridge
            continue
        vs = other[indices[lo:hi]]
        a = vs.T @ vs + ridge * eye
        b = values[lo:hi] @ vs
        if rhs_base is not None:
            b = b + rhs_base[j]
        out[j] = np.linalg.solve(a, b)
    return out
