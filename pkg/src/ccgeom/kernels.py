"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting ``CCGEOM_PURE=1``
forces the numpy fallback.
"""
import os

from . import _kernels_py

try:
    if os.environ.get("CCGEOM_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]


def cross_distance(k, r, t1, t2, phi, n_grid, tol):
    """min over boundary b of d((t1,u1),(r,b)) + d((t2,u2),(r,b)).

    ``phi`` is the angle between u1 and u2. Returns ``(values, theta)``
    where theta is the angle of the optimal b measured from u1 towards u2.
    """
    return _active.cross_distance(k, r, t1, t2, phi, n_grid, tol)


def get_backend(name):
    return BACKENDS[name]
