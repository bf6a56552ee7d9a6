"""Hot transport kernels: compiled extension when built, numpy otherwise.

Set ``CAPSENSE_PURE_PYTHON=1`` to force the numpy path.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("CAPSENSE_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py


def advective_outflow(c, Fz, Fr, active, c_in, limiter, out, impl=None):
    impl = impl or _impl
    if impl is _kernels_py:
        return impl.advective_outflow(c, Fz, Fr, active.astype(bool, copy=False), c_in,
                                      bool(limiter), out)
    return impl.advective_outflow(c, Fz, Fr, active.view(np.uint8), float(c_in), bool(limiter),
                                  out)


def max_outflow_ratio(Fz, Fr, volumes, active, impl=None):
    impl = impl or _impl
    if impl is _kernels_py:
        return impl.max_outflow_ratio(Fz, Fr, volumes, active.astype(bool, copy=False))
    return impl.max_outflow_ratio(np.ascontiguousarray(Fz), np.ascontiguousarray(Fr),
                                  np.ascontiguousarray(volumes), active.view(np.uint8))


def implementations():
    """Available backends by name (for tests and the benchmark)."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels

        impls["cython"] = _kernels
    except ImportError:
        pass
    return impls
