# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cross-boundary minimizer.

For each pair the objective is

    g(theta) = D(t1, theta) + D(t2, phi - theta),  theta in [0, phi]

with D(t, a) the distance from (t, u) to the boundary point (r, b) when
angle(u, b) = a. The minimizer is located on a grid of ``n_grid`` points and
refined with Brent's method from the three best grid seeds lying in
distinct basins (adjacent grid points share a bracket).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, sinh, sqrt, asin, asinh, fabs

cnp.import_array()

cdef double _CGOLD = 0.3819660112501051


cdef struct Pair:
    int k
    double a1, b1, a2, b2, phi


cdef inline double _leg(int k, double a, double b, double half) nogil:
    # distance to the rim point at angle 2*half, from the precomputed
    # half-angle constants a = A(t, r), b = B(t, r)
    cdef double s = sin(half)
    cdef double h = a + b * s * s
    if h < 0.0:
        h = 0.0
    if k == 0:
        return sqrt(h)
    if k == 1:
        if h > 1.0:
            h = 1.0
        return 2.0 * asin(sqrt(h))
    return 2.0 * asinh(sqrt(h))


cdef inline void _consts(int k, double t, double r, double *a, double *b) nogil:
    cdef double s
    if k == 0:
        a[0] = (t - r) * (t - r)
        b[0] = 4.0 * t * r
    elif k == 1:
        s = sin(0.5 * (t - r))
        a[0] = s * s
        b[0] = sin(t) * sin(r)
    else:
        s = sinh(0.5 * (t - r))
        a[0] = s * s
        b[0] = sinh(t) * sinh(r)


cdef inline double _gridleg(int k, double a, double b, double s2) nogil:
    cdef double h = a + b * s2
    if h < 0.0:
        h = 0.0
    if k == 0:
        return sqrt(h)
    if k == 1:
        if h > 1.0:
            h = 1.0
        return 2.0 * asin(sqrt(h))
    return 2.0 * asinh(sqrt(h))


cdef inline double _obj(Pair *p, double th) nogil:
    return _leg(p.k, p.a1, p.b1, 0.5 * th) + _leg(p.k, p.a2, p.b2, 0.5 * (p.phi - th))


cdef double _brent(Pair *p, double a, double b, double tol, double *xmin) nogil:
    # Brent's localmin on [a, b] (golden section + parabolic steps)
    cdef double x, w, v, fx, fw, fv, u, fu, m, tol1, tol2, q, rr, d = 0.0, e = 0.0
    cdef double pp
    cdef int it
    x = a + _CGOLD * (b - a)
    w = x
    v = x
    fx = _obj(p, x)
    fw = fx
    fv = fx
    for it in range(200):
        m = 0.5 * (a + b)
        tol1 = tol * fabs(x) + 1e-15
        tol2 = 2.0 * tol1
        if fabs(x - m) <= tol2 - 0.5 * (b - a):
            break
        if fabs(e) > tol1:
            rr = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            pp = (x - v) * q - (x - w) * rr
            q = 2.0 * (q - rr)
            if q > 0.0:
                pp = -pp
            else:
                q = -q
            rr = e
            e = d
            if fabs(pp) < fabs(0.5 * q * rr) and pp > q * (a - x) and pp < q * (b - x):
                d = pp / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if x < m else -tol1
            else:
                e = (b - x) if x < m else (a - x)
                d = _CGOLD * e
        else:
            e = (b - x) if x < m else (a - x)
            d = _CGOLD * e
        if fabs(d) >= tol1:
            u = x + d
        else:
            u = x + (tol1 if d > 0 else -tol1)
        fu = _obj(p, u)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v = w
            fv = fw
            w = x
            fw = fx
            x = u
            fx = fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v = w
                fv = fw
                w = u
                fw = fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
    xmin[0] = x
    return fx


def cross_distance(int k, double r, t1, t2, phi, int n_grid, double tol):
    """Vectorized min over the boundary arc; returns (values, argmin angles)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a1 = np.ascontiguousarray(t1, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a2 = np.ascontiguousarray(t2, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ph = np.ascontiguousarray(phi, dtype=np.float64).ravel()
    cdef Py_ssize_t m = a1.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arg = np.empty(m)
    cdef double[:] ov = out
    cdef double[:] av = arg
    cdef double[:] x1 = a1
    cdef double[:] x2 = a2
    cdef double[:] pv = ph
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gbuf = np.empty(n_grid)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sbuf = np.empty(n_grid)
    cdef double[:] g = gbuf
    cdef double[:] sg = sbuf
    cdef Py_ssize_t i, j, s, lo, hi
    cdef int best[3]
    cdef int nb
    cdef double bestv, bestx, fv, xm, step, h
    cdef Pair p
    if ph.shape[0] != m or a2.shape[0] != m:
        raise ValueError("t1, t2 and phi must have equal length")
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    p.k = k
    with nogil:
        for i in range(m):
            _consts(k, x1[i], r, &p.a1, &p.b1)
            _consts(k, x2[i], r, &p.a2, &p.b2)
            p.phi = pv[i]
            if p.phi <= 0.0:
                p.phi = 0.0
                ov[i] = _obj(&p, 0.0)
                av[i] = 0.0
                continue
            step = p.phi / (n_grid - 1)
            # the grid is symmetric, so one table of half-angle sines serves both legs
            for j in range(n_grid):
                h = sin(0.5 * j * step)
                sg[j] = h * h
            for j in range(n_grid):
                g[j] = _gridleg(k, p.a1, p.b1, sg[j]) + _gridleg(k, p.a2, p.b2, sg[n_grid - 1 - j])
            # three best grid seeds in distinct basins, ties to the smaller angle
            nb = 0
            best[0] = -1
            best[1] = -1
            best[2] = -1
            for s in range(3):
                lo = -1
                for j in range(n_grid):
                    if (nb > 0 and j >= best[0] - 1 and j <= best[0] + 1) or \
                       (nb > 1 and j >= best[1] - 1 and j <= best[1] + 1):
                        continue
                    if lo < 0 or g[j] < g[lo]:
                        lo = j
                if lo < 0:
                    break
                best[nb] = lo
                nb += 1
            bestv = g[best[0]]
            bestx = best[0] * step
            for s in range(nb):
                j = best[s]
                # descent from a grid point that is not a discrete local
                # minimum just runs into a neighbouring basin
                if s > 0 and ((j > 0 and g[j - 1] < g[j]) or (j < n_grid - 1 and g[j + 1] < g[j])):
                    continue
                lo = j - 1 if j > 0 else 0
                hi = j + 1 if j < n_grid - 1 else n_grid - 1
                fv = _brent(&p, lo * step, hi * step, tol, &xm)
                if fv < bestv or (fv == bestv and xm < bestx):
                    bestv = fv
                    bestx = xm
            ov[i] = bestv
            av[i] = bestx
    return out, arg

