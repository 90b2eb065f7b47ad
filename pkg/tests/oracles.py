"""Independent brute-force routes used as test oracles.

Nothing here calls the crossing kernels: boundary minimization is done by
a dense search over rim directions followed by scipy refinement, using only
the space-form distance.
"""
import math

import numpy as np
from scipy import optimize

from ccgeom import spaceform as sf
from ccgeom.modelspace import ModelKind


def _sfd(k, t1, u1, t2, u2):
    x = sf.from_polar(k, t1, u1)
    y = sf.from_polar(k, t2, u2)
    return sf.distance(x, y)


def glue_image(kind, u):
    u = np.array(u, dtype=float)
    if kind is ModelKind.CROSSCAP:
        return -u
    if kind is ModelKind.PURSE:
        u[-1] = -u[-1]
    return u


def rim_min(k, r, t1, u1, t2, u2, grid=721):
    """min over unit b of d((t1,u1),(r,b)) + d((r,b),(t2,u2)) by search on S^{n-1}."""
    u1, u2 = np.asarray(u1, float), np.asarray(u2, float)
    n = u1.size

    def cost(b):
        b = b / np.linalg.norm(b)
        return _sfd(k, t1, u1, r, b) + _sfd(k, r, b, t2, u2)

    if n == 2:
        a = np.linspace(0, 2 * math.pi, grid, endpoint=False)
        vals = [cost(np.array([math.cos(x), math.sin(x)])) for x in a]
        a0 = a[int(np.argmin(vals))]
        h = 2 * math.pi / grid
        res = optimize.minimize_scalar(lambda x: cost(np.array([math.cos(x), math.sin(x)])),
                                       bounds=(a0 - h, a0 + h), method="bounded",
                                       options={"xatol": 1e-13})
        return float(min(res.fun, min(vals)))
    rng = np.random.default_rng(0)
    cand = rng.standard_normal((4000, n))
    cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    cand = np.vstack([cand, u1, u2, u1 + u2 if np.linalg.norm(u1 + u2) > 1e-9 else u1])
    vals = [cost(b) for b in cand]
    best = np.inf
    for j in np.argsort(vals)[:3]:
        res = optimize.minimize(cost, cand[j], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        best = min(best, res.fun)
    return float(best)


def brute_distance(x, y):
    """Model distance from the definition: direct path or one rim crossing."""
    k, r = x.params.k, x.params.r
    direct = _sfd(k, x.t, x.uvec, y.t, y.uvec)
    kind = x.kind
    if kind is ModelKind.DISK:
        return direct
    if kind is ModelKind.DOUBLE_DISK:
        if x.sheet == y.sheet:
            return direct
        return rim_min(k, r, x.t, x.uvec, y.t, y.uvec)
    return min(direct, rim_min(k, r, x.t, x.uvec, y.t, glue_image(kind, y.uvec)))
