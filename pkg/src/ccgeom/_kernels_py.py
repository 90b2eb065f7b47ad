"""Pure numpy fallback for :mod:`ccgeom._kernels`.

Same grid + three-basin refinement as the compiled kernel, but refinement
uses a fixed number of vectorized golden-section steps instead of Brent.
"""
import numpy as np

from .spaceform import polar_distance

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_STEPS = 80


def _obj(k, r, t1, t2, phi, th):
    return polar_distance(k, t1, r, th) + polar_distance(k, t2, r, phi - th)


def _distinct_seeds(g):
    """Indices of the three best grid values in pairwise non-adjacent cells."""
    g = g.copy()
    m, n = g.shape
    rows = np.arange(m)
    seeds = []
    for _ in range(3):
        j = np.argmin(g, axis=1)
        seeds.append(j)
        for off in (-1, 0, 1):
            g[rows, np.clip(j + off, 0, n - 1)] = np.inf
    # on tiny grids an exhausted row falls back to index 0 (refined twice)
    return np.stack(seeds, axis=1)


_BLOCK = 1 << 21  # grid cells per block, bounds the working memory


def cross_distance(k, r, t1, t2, phi, n_grid, tol):
    t1 = np.ascontiguousarray(t1, dtype=float).ravel()
    t2 = np.ascontiguousarray(t2, dtype=float).ravel()
    phi = np.ascontiguousarray(phi, dtype=float).ravel()
    if not (t1.shape == t2.shape == phi.shape):
        raise ValueError("t1, t2 and phi must have equal length")
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    m = t1.size
    out = np.empty(m)
    arg = np.zeros(m)
    rows = max(1, _BLOCK // n_grid)
    for a in range(0, m, rows):
        sl = slice(a, min(m, a + rows))
        _block(k, r, t1[sl], t2[sl], phi[sl], n_grid, tol, out[sl], arg[sl])
    return out, arg


def _block(k, r, t1, t2, phi, n_grid, tol, out, arg):
    m = t1.size
    step = phi / (n_grid - 1)
    th = step[:, None] * np.arange(n_grid)[None, :]
    g = _obj(k, r, t1[:, None], t2[:, None], phi[:, None], th)
    order = _distinct_seeds(g)
    rows = np.arange(m)
    best_v = g[rows, order[:, 0]]
    best_x = th[rows, order[:, 0]]
    gl = np.pad(g, ((0, 0), (1, 1)), constant_values=np.inf)
    for s in range(order.shape[1]):
        j = order[:, s]
        local = (gl[rows, j] >= g[rows, j]) & (gl[rows, j + 2] >= g[rows, j])
        if s > 0 and not np.any(local):
            continue
        a = np.maximum(j - 1, 0) * step
        b = np.minimum(j + 1, n_grid - 1) * step
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc = _obj(k, r, t1, t2, phi, c)
        fd = _obj(k, r, t1, t2, phi, d)
        for _ in range(_GOLDEN_STEPS):
            left = fc <= fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            d_new = np.where(left, c, a + _INVPHI * (b - a))
            c_new = np.where(left, b - _INVPHI * (b - a), d)
            f_probe = _obj(k, r, t1, t2, phi, np.where(left, c_new, d_new))
            fd_new = np.where(left, fc, f_probe)
            fc_new = np.where(left, f_probe, fd)
            c, d, fc, fd = c_new, d_new, fc_new, fd_new
            if np.all(b - a <= tol * (1.0 + np.abs(a))):
                break
        x = 0.5 * (a + b)
        fx = _obj(k, r, t1, t2, phi, x)
        better = ((fx < best_v) | ((fx == best_v) & (x < best_x))) & (local | (s == 0))
        best_v = np.where(better, fx, best_v)
        best_x = np.where(better, x, best_x)
    flat = phi <= 0.0
    if np.any(flat):
        best_v[flat] = _obj(k, r, t1[flat], t2[flat], 0.0, 0.0)
        best_x[flat] = 0.0
    out[:] = best_v
    arg[:] = best_x
    return out, arg
