"""Finite-difference derivatives of scalar fields on model spaces.

A field is any callable taking a :class:`PointSet` and returning an array
whose first axis runs over the points (extra axes are components).
Steps follow geodesics in the disk chart and are unfolded across the
glued boundary, so points on or near the rim are handled without leaving
the model.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .modelspace import PointSet, geodesic_step, tangent_frame


def _stacked(F, sets):
    """Evaluate F once on the concatenation of several point sets."""
    big = sets[0]
    for s in sets[1:]:
        big = big.concat(s)
    vals = np.asarray(F(big))
    m = len(sets[0])
    return [vals[i * m:(i + 1) * m] for i in range(len(sets))]


def directional_derivatives(F, P: PointSet, V: np.ndarray, h: float, F0=None) -> np.ndarray:
    """D_V F at every point of P (V: unit chart tangents, shape (m, n+1)).

    Central differences where neither step crosses the rim. When exactly
    one side crosses, the second-order one-sided stencil on the other side
    is used; when both do, the unfolded central stencil is kept.
    """
    if not h > 0:
        raise DomainError("finite-difference step must be positive")
    V = np.asarray(V, dtype=float)
    plus, cp = geodesic_step(P, V, h, strict=False)
    minus, cm = geodesic_step(P, -V, h, strict=False)
    fp, fm = _stacked(F, [plus, minus])
    out = (fp - fm) / (2.0 * h)
    one = cp ^ cm
    if np.any(one):
        idx = np.flatnonzero(one)
        sub = P.take(idx)
        # step away from the crossing side
        sgn = np.where(cp[idx], -1.0, 1.0)
        W = V[idx] * sgn[:, None]
        q2, c2 = geodesic_step(sub, W, 2.0 * h, strict=False)
        shape = (-1,) + (1,) * (fp.ndim - 1)
        near = np.where(cp[idx].reshape(shape), fm[idx], fp[idx])
        f0 = np.asarray(F(sub)) if F0 is None else np.asarray(F0)[idx]
        f2 = np.asarray(F(q2))
        d1 = (-3.0 * f0 + 4.0 * near - f2) / (2.0 * h)
        # both one-sided steps crossing leaves only the first-order stencil
        first = (near - f0) / h
        d1 = np.where(c2.reshape(shape), first, d1)
        out[idx] = d1 * sgn.reshape(shape)
    return out


def frame_gradients(F, P: PointSet, h: float):
    """Gradients of F in an orthonormal tangent frame at every point.

    Returns ``(grad, frames)`` where ``grad`` has shape (m, n) for scalar
    fields or (m, c, n) for c-component fields, and ``frames`` (m, n, n+1)
    holds the chart tangent vectors.
    """
    frames = tangent_frame(P.params.k, P.chart())
    n = P.params.n
    f0 = np.asarray(F(P))
    cols = [directional_derivatives(F, P, frames[:, j], h, F0=f0) for j in range(n)]
    return np.stack(cols, axis=-1), frames
