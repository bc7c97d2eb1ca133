"""Backend selection for the row-wise factor solves.

The compiled extension is preferred when present; the pure-numpy module is
the fallback so a failed build only costs speed.  MDCF_KERNELS=python or
MDCF_KERNELS=cython forces a backend (the latter raises if unavailable).
Both backends satisfy the same contract and agree to tight tolerance, which
the test suite checks directly.
"""

import os

from . import _factor_numpy

try:
    from . import _factor_core
except ImportError:
    _factor_core = None


def available_backends():
    names = ["python"]
    if _factor_core is not None:
        names.insert(0, "cython")
    return names


def implementation(name):
    """solve_factors callable for an explicit backend name."""
    if name == "python":
        return _factor_numpy.solve_factors
    if name == "cython":
        if _factor_core is None:
            raise ImportError("compiled kernel backend is not available")
        return _factor_core.solve_factors
    raise ValueError("unknown kernel backend %r" % (name,))


def _select():
    forced = os.environ.get("MDCF_KERNELS")
    if forced:
        return forced, implementation(forced)
    if _factor_core is not None:
        return "cython", _factor_core.solve_factors
    return "python", _factor_numpy.solve_factors


BACKEND, solve_factors = _select()
