"""Disk, double disk, crosscap and purse over a constant-curvature r-disk.

A model point is stored in normal coordinates ``(t, u, sheet)`` about the
disk center: ``t`` in [0, r] is the distance to the center, ``u`` a unit
vector of R^n, and ``sheet`` is +1 / -1 (only the double disk uses -1).

The + sheet is realized in the space form as exp_{e_0}(t u); the - sheet as
exp_{-e_0}(t u). Internally every sheet is handled in the *disk chart*, the
+ realization, since the two sheets are isometric by x_0 -> -x_0.

Gluing conventions:

* DoubleDisk: (r, u, +) ~ (r, u, -); involution A(t, u, s) = (t, -u, -s).
* Crosscap: boundary antipodes (r, u) ~ (r, -u).
* Purse: (r, u) ~ (r, R u), R negating the last coordinate of u.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import spaceform as sf
from .errors import DomainError, NumericalError, UnsupportedKindError
from .kernels import cross_distance

GLUE_TOL = 1e-12


class ModelKind(enum.Enum):
    DISK = "Disk"
    DOUBLE_DISK = "DoubleDisk"
    CROSSCAP = "Crosscap"
    PURSE = "Purse"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if str(value).lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise DomainError(f"unknown model kind {value!r}")


@dataclass(frozen=True)
class ModelParams:
    n: int
    k: int
    r: float

    def __post_init__(self):
        sf.check_curvature(self.k)
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("model dimension n must be an integer >= 2")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise DomainError("model radius r must be positive")
        if self.k == 1 and self.r >= math.pi / 2:
            raise DomainError("k=1 models need r < pi/2")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class SolverOpts:
    tol: float = 1e-10
    x_tol: float = 1e-12
    max_restarts: int = 3
    n_grid: int | None = None

    def grid(self, n: int) -> int:
        return self.n_grid if self.n_grid is not None else max(64, 32 * n)


DEFAULT_OPTS = SolverOpts()


def _canonical_u(kind: ModelKind, n: int, t: float, r: float, u: np.ndarray):
    if t <= GLUE_TOL * max(1.0, r):
        e1 = np.zeros(n)
        e1[0] = 1.0
        return 0.0, e1
    if abs(t - r) <= GLUE_TOL * max(1.0, r):
        t = r
        if kind is ModelKind.CROSSCAP:
            u = max(tuple(u), tuple(-u))
            u = np.array(u)
        elif kind is ModelKind.PURSE:
            ru = u.copy()
            ru[-1] = -ru[-1]
            u = np.array(max(tuple(u), tuple(ru)))
    return t, u


@dataclass(frozen=True)
class ModelPoint:
    kind: ModelKind
    params: ModelParams
    t: float
    u: tuple
    sheet: int = 1

    def __post_init__(self):
        p = self.params
        u = np.asarray(self.u, dtype=float)
        if u.shape != (p.n,):
            raise DomainError(f"direction must have {p.n} components")
        if abs(float(np.linalg.norm(u)) - 1.0) > 1e-12:
            raise DomainError("direction must be a unit vector")
        if not (-GLUE_TOL <= self.t <= p.r * (1 + GLUE_TOL)):
            raise DomainError(f"radial coordinate {self.t} outside [0, r]")
        if self.sheet not in (1, -1):
            raise DomainError("sheet must be +1 or -1")
        if self.sheet == -1 and self.kind is not ModelKind.DOUBLE_DISK:
            raise DomainError(f"{self.kind.value} points live on the + sheet")

    @classmethod
    def make(cls, kind, params: ModelParams, t: float, u, sheet: int = 1) -> "ModelPoint":
        """Build the canonical representative of (t, u, sheet)."""
        kind = ModelKind.parse(kind)
        u = np.asarray(u, dtype=float).reshape(-1)
        nrm = float(np.linalg.norm(u))
        if nrm == 0.0:
            raise DomainError("direction must be nonzero")
        if abs(nrm - 1.0) > 4e-16 * u.size:
            u = u / nrm
        t = float(t)
        if t < -GLUE_TOL or t > params.r * (1 + GLUE_TOL):
            raise DomainError(f"radial coordinate {t} outside [0, r]")
        t = min(max(t, 0.0), params.r)
        t, u = _canonical_u(kind, params.n, t, params.r, u)
        sheet = int(sheet)
        if kind is not ModelKind.DOUBLE_DISK:
            if sheet != 1:
                raise DomainError(f"{kind.value} points live on the + sheet")
        elif t == params.r:
            sheet = 1
        return cls(kind, params, t, tuple(float(c) for c in u), sheet)

    @property
    def uvec(self) -> np.ndarray:
        return np.array(self.u)

    def chart(self) -> np.ndarray:
        return sf.from_polar(self.params.k, self.t, self.uvec).coords.copy()

    def ambient(self) -> np.ndarray:
        """Space-form coordinates (center +e_0 or -e_0 by sheet)."""
        return sf.from_polar(self.params.k, self.t, self.uvec, self.sheet).coords.copy()

    def on_boundary(self) -> bool:
        return self.t == self.params.r


# ---------------------------------------------------------------------------
# vectorized point sets


@dataclass
class PointSet:
    """Array-of-structs view of many model points of one model."""

    kind: ModelKind
    params: ModelParams
    t: np.ndarray
    u: np.ndarray
    sheet: np.ndarray = field(default=None)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.u = np.asarray(self.u, dtype=float).reshape(self.t.size, self.params.n)
        if self.sheet is None:
            self.sheet = np.ones(self.t.size, dtype=np.int8)
        self.sheet = np.asarray(self.sheet, dtype=np.int8).reshape(-1)

    @classmethod
    def make(cls, kind, params, t, u, sheet=None) -> "PointSet":
        """Vectorized canonicalization (see :meth:`ModelPoint.make`)."""
        kind = ModelKind.parse(kind)
        t = np.asarray(t, dtype=float).reshape(-1).copy()
        u = np.asarray(u, dtype=float).reshape(t.size, params.n).copy()
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        sheet = np.ones(t.size, dtype=np.int8) if sheet is None else np.asarray(sheet, dtype=np.int8).copy()
        r = params.r
        tol = GLUE_TOL * max(1.0, r)
        t = np.clip(t, 0.0, r)
        center = t <= tol
        t[center] = 0.0
        u[center] = 0.0
        u[center, 0] = 1.0
        rim = np.abs(t - r) <= tol
        t[rim] = r
        if np.any(rim):
            if kind is ModelKind.CROSSCAP:
                flip = _lex_less(u[rim], -u[rim])
                sub = u[rim]
                sub[flip] *= -1.0
                u[rim] = sub
            elif kind is ModelKind.PURSE:
                sub = u[rim]
                refl = sub.copy()
                refl[:, -1] *= -1.0
                flip = _lex_less(sub, refl)
                sub[flip] = refl[flip]
                u[rim] = sub
        if kind is ModelKind.DOUBLE_DISK:
            sheet[rim] = 1
        else:
            sheet[:] = 1
        return cls(kind, params, t, u, sheet)

    @classmethod
    def from_points(cls, points) -> "PointSet":
        points = list(points)
        if not points:
            raise DomainError("empty point list")
        kind, params = points[0].kind, points[0].params
        for p in points:
            if p.kind is not kind or p.params != params:
                raise DomainError("points belong to different models")
        return cls(
            kind,
            params,
            np.array([p.t for p in points]),
            np.array([p.u for p in points]),
            np.array([p.sheet for p in points], dtype=np.int8),
        )

    def to_points(self):
        return [self.point(i) for i in range(len(self))]

    def point(self, i: int) -> ModelPoint:
        return ModelPoint(self.kind, self.params, float(self.t[i]), tuple(self.u[i].tolist()), int(self.sheet[i]))

    def __len__(self):
        return self.t.size

    def take(self, idx) -> "PointSet":
        idx = np.asarray(idx)
        return PointSet(self.kind, self.params, self.t[idx], self.u[idx], self.sheet[idx])

    def repeat(self, count: int) -> "PointSet":
        return PointSet(
            self.kind, self.params, np.repeat(self.t, count), np.repeat(self.u, count, axis=0),
            np.repeat(self.sheet, count),
        )

    def tile(self, count: int) -> "PointSet":
        return self.take(np.tile(np.arange(len(self)), count))

    def concat(self, other: "PointSet") -> "PointSet":
        if other.kind is not self.kind or other.params != self.params:
            raise DomainError("point sets belong to different models")
        return PointSet(
            self.kind, self.params, np.r_[self.t, other.t], np.vstack([self.u, other.u]),
            np.r_[self.sheet, other.sheet],
        )

    def chart(self) -> np.ndarray:
        return polar_to_chart(self.params.k, self.t, self.u)

    def ambient(self) -> np.ndarray:
        x = self.chart()
        x[:, 0] *= self.sheet
        return x


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic a < b."""
    diff = a != b
    first = np.argmax(diff, axis=1)
    rows = np.arange(a.shape[0])
    return diff.any(axis=1) & (a[rows, first] < b[rows, first])


def polar_to_chart(k: int, t, u) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(t.size, -1)
    x = np.empty((t.size, u.shape[1] + 1))
    if k == 1:
        x[:, 0] = np.cos(t)
        x[:, 1:] = np.sin(t)[:, None] * u
    elif k == 0:
        x[:, 0] = 1.0
        x[:, 1:] = t[:, None] * u
    else:
        x[:, 0] = np.cosh(t)
        x[:, 1:] = np.sinh(t)[:, None] * u
    return x


def chart_to_polar(k: int, x: np.ndarray):
    """Inverse of :func:`polar_to_chart`; the center gets u = e_1."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sp = x[:, 1:]
    nrm = np.linalg.norm(sp, axis=1)
    if k == 1:
        t = np.arctan2(nrm, x[:, 0])
    elif k == 0:
        t = nrm
    else:
        t = np.arcsinh(nrm)
    u = np.zeros_like(sp)
    ok = nrm > 0
    u[ok] = sp[ok] / nrm[ok, None]
    u[~ok, 0] = 1.0
    return t, u


# ---------------------------------------------------------------------------
# involutions


def involution_A(x: ModelPoint) -> ModelPoint:
    """The free involution of the double disk and its induced maps."""
    if x.kind is ModelKind.DISK:
        raise UnsupportedKindError("A swaps sheets and is not defined on a single disk")
    if x.kind is ModelKind.CROSSCAP:
        # the crosscap is the quotient by A, so A descends to the identity
        return x
    sheet = -x.sheet if x.kind is ModelKind.DOUBLE_DISK else 1
    return ModelPoint.make(x.kind, x.params, x.t, -x.uvec, sheet)


def apply_A(P: PointSet) -> PointSet:
    if P.kind is ModelKind.DISK:
        raise UnsupportedKindError("A swaps sheets and is not defined on a single disk")
    if P.kind is ModelKind.CROSSCAP:
        return PointSet(P.kind, P.params, P.t.copy(), P.u.copy(), P.sheet.copy())
    sheet = -P.sheet if P.kind is ModelKind.DOUBLE_DISK else P.sheet
    return PointSet.make(P.kind, P.params, P.t, -P.u, sheet)


def reflect_R(x: ModelPoint) -> ModelPoint:
    """Reflection in the hyperplane spanned by e_0, ..., e_{n-1}."""
    u = x.uvec
    u[-1] = -u[-1]
    return ModelPoint.make(x.kind, x.params, x.t, u, x.sheet)


def apply_R(P: PointSet) -> PointSet:
    u = P.u.copy()
    u[:, -1] *= -1.0
    return PointSet.make(P.kind, P.params, P.t, u, P.sheet)


# ---------------------------------------------------------------------------
# intrinsic distance


def _check_pair(P: PointSet, Q: PointSet):
    if P.kind is not Q.kind or P.params != Q.params:
        raise DomainError("points belong to different models")


def _glue_image_u(kind: ModelKind, u: np.ndarray) -> np.ndarray:
    """Direction of the identified lift used by the crossing term."""
    if kind is ModelKind.CROSSCAP:
        return -u
    if kind is ModelKind.PURSE:
        v = u.copy()
        v[..., -1] = -v[..., -1]
        return v
    return u


def _cross(params: ModelParams, t1, t2, phi, opts: SolverOpts):
    grid = opts.grid(params.n)
    vals, arg = cross_distance(params.k, params.r, t1, t2, phi, grid, opts.x_tol)
    restarts = 0
    bad = ~np.isfinite(vals)
    while np.any(bad):
        if restarts >= opts.max_restarts:
            raise NumericalError("boundary minimization did not converge", best=vals)
        restarts += 1
        grid *= 2
        v2, a2 = cross_distance(params.k, params.r, t1[bad], t2[bad], phi[bad], grid, opts.x_tol)
        vals[bad], arg[bad] = v2, a2
        bad = ~np.isfinite(vals)
    return vals, arg


def pair_distances(P: PointSet, Q: PointSet, opts: SolverOpts = DEFAULT_OPTS, *, return_crossing=False):
    """Elementwise intrinsic distances d(P[i], Q[i]).

    With ``return_crossing`` also returns a boolean mask of pairs whose
    minimizing path crosses the glued boundary and the crossing angle
    measured from P's direction.
    """
    _check_pair(P, Q)
    if len(P) != len(Q):
        raise DomainError("point sets must have equal length")
    k, r = P.params.k, P.params.r
    phi_direct = sf.unit_angle(P.u, Q.u)
    direct = sf.polar_distance(k, P.t, Q.t, phi_direct)
    crossed = np.zeros(len(P), dtype=bool)
    theta = np.zeros(len(P))
    kind = P.kind
    if kind is ModelKind.DISK:
        out = direct
    elif kind is ModelKind.DOUBLE_DISK:
        out = direct.copy()
        cross = P.sheet != Q.sheet
        if np.any(cross):
            v, a = _cross(P.params, P.t[cross], Q.t[cross], phi_direct[cross], opts)
            out[cross] = v
            theta[cross] = a
            crossed = cross
    else:
        phi_glue = sf.unit_angle(P.u, _glue_image_u(kind, Q.u))
        # the crossing term can only win when both points can reach the rim
        # faster than the direct path; skipping it elsewhere is exact
        lower = (r - P.t) + (r - Q.t)
        need = lower < direct
        out = direct.copy()
        if np.any(need):
            v, a = _cross(P.params, P.t[need], Q.t[need], phi_glue[need], opts)
            win = v < out[need]
            idx = np.flatnonzero(need)
            out[idx[win]] = v[win]
            theta[idx[win]] = a[win]
            crossed[idx[win]] = True
    if return_crossing:
        return out, crossed, theta
    return out


def distance_matrix(P: PointSet, Q: PointSet | None = None, opts: SolverOpts = DEFAULT_OPTS,
                    chunk: int = 200_000) -> np.ndarray:
    """All pairwise intrinsic distances between P and Q (or P and itself)."""
    sym = Q is None
    if sym:
        Q = P
    _check_pair(P, Q)
    m1, m2 = len(P), len(Q)
    out = np.zeros((m1, m2))
    if sym:
        ii, jj = np.triu_indices(m1, k=1)
    else:
        ii, jj = (a.ravel() for a in np.meshgrid(np.arange(m1), np.arange(m2), indexing="ij"))
    for s in range(0, ii.size, chunk):
        a, b = ii[s:s + chunk], jj[s:s + chunk]
        out[a, b] = pair_distances(P.take(a), Q.take(b), opts)
    if sym:
        out = out + out.T
    return out


def model_distance(*args, opts: SolverOpts | None = None) -> float:
    """Intrinsic distance on the model x and y belong to.

    Accepts ``(x, y[, opts])`` or ``(kind, x, y[, opts])``; in the second
    form the points must be of that kind.
    """
    args = list(args)
    kind = None
    if args and isinstance(args[0], (ModelKind, str)):
        kind = ModelKind.parse(args.pop(0))
    if len(args) not in (2, 3):
        raise TypeError("model_distance expects two points and optional opts")
    x, y = args[0], args[1]
    if len(args) == 3:
        opts = args[2]
    opts = DEFAULT_OPTS if opts is None else opts
    if kind is not None and x.kind is not kind:
        raise DomainError(f"points are on a {x.kind.value}, not a {kind.value}")
    if x.kind is not y.kind or x.params != y.params:
        raise DomainError("points belong to different models")
    return float(pair_distances(PointSet.from_points([x]), PointSet.from_points([y]), opts)[0])


def distances_to(x: ModelPoint, Q: PointSet, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    return pair_distances(PointSet.from_points([x]).repeat(len(Q)), Q, opts)


# ---------------------------------------------------------------------------
# reference points, volume, sampling


@dataclass(frozen=True)
class BasePoints:
    p0: ModelPoint
    p: tuple  # p[0] is p_0, p[i] is p_i for i = 1..n

    def __getitem__(self, i: int) -> ModelPoint:
        return self.p[i]

    def __len__(self):
        return len(self.p)


def base_points(params: ModelParams, kind=ModelKind.DOUBLE_DISK) -> BasePoints:
    """p_0 (center) and the rim points p_1..p_n.

    In the space form p_i is cosh r e_0 + sinh r e_i (k=-1), e_0 + r e_i
    (k=0) and cos r e_0 - sin r e_i (k=1).
    """
    kind = ModelKind.parse(kind)
    n = params.n
    sign = -1.0 if params.k == 1 else 1.0
    pts = [ModelPoint.make(kind, params, 0.0, np.eye(n)[0])]
    for i in range(n):
        pts.append(ModelPoint.make(kind, params, params.r, sign * np.eye(n)[i]))
    return BasePoints(pts[0], tuple(pts))


def total_volume(kind, params: ModelParams) -> float:
    kind = ModelKind.parse(kind)
    v = sf.ball_volume(params.n, params.k, params.r)
    return 2.0 * v if kind is ModelKind.DOUBLE_DISK else v


def _sample_radii(params: ModelParams, count: int, rng: np.random.Generator, rmax: float | None = None):
    """Radii with density proportional to sn_k(t)^{n-1} on [0, rmax]."""
    n, k = params.n, params.k
    rmax = params.r if rmax is None else rmax
    out = np.empty(0)
    while out.size < count:
        m = max(2 * (count - out.size), 64)
        t = rmax * rng.random(m) ** (1.0 / n)
        if k == 0:
            acc = t
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(t > 0, sf.sn(k, t) / np.where(t > 0, t, 1.0), 1.0)
            if k == -1:
                ratio = ratio / (math.sinh(rmax) / rmax)
            acc = t[rng.random(m) <= ratio ** (n - 1)]
        out = np.r_[out, acc]
    return out[:count]


def _sphere_dirs(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _grid_dirs(n: int, m: int, seed: int) -> np.ndarray:
    if n == 2:
        a = 2.0 * np.pi * np.arange(m) / m
        return np.c_[np.cos(a), np.sin(a)]
    if n == 3:
        i = np.arange(m) + 0.5
        z = 1.0 - 2.0 * i / m
        ang = np.pi * (1.0 + 5.0**0.5) * i
        s = np.sqrt(1.0 - z * z)
        return np.c_[s * np.cos(ang), s * np.sin(ang), z]
    from scipy.stats import norm, qmc

    h = qmc.Halton(d=n, scramble=True, seed=seed).random(m)
    g = norm.ppf(np.clip(h, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_set(kind, params: ModelParams, count: int, mode: str = "uniform", seed: int = 0) -> PointSet:
    """Seeded uniform (volume measure) or product-grid samples."""
    kind = ModelKind.parse(kind)
    if count < 1:
        raise DomainError("count must be >= 1")
    two = kind is ModelKind.DOUBLE_DISK
    if mode == "uniform":
        rng = np.random.default_rng(seed)
        t = _sample_radii(params, count, rng)
        u = _sphere_dirs(params.n, count, rng)
        sheet = np.where(rng.random(count) < 0.5, 1, -1) if two else None
        return PointSet.make(kind, params, t, u, sheet)
    if mode != "grid":
        raise DomainError(f"unknown sampling mode {mode!r}")
    n, r = params.n, params.r
    centers = [(0.0, 1)] + ([(0.0, -1)] if two else [])
    nsheet = 2 if two else 1
    extra = 0
    while True:
        rest = count - len(centers) + extra
        ts, us, ss = [c[0] for c in centers], [np.eye(n)[0]] * len(centers), [c[1] for c in centers]
        if rest > 0:
            m_t = max(1, int(math.ceil(math.sqrt(rest / (nsheet * 2.0 * math.pi)))))
            m_u = int(math.ceil(rest / (nsheet * m_t))) + 2
            dirs = _grid_dirs(n, m_u, seed)
            for s in ([1, -1] if two else [1]):
                for j in range(1, m_t + 1):
                    for d in dirs:
                        ts.append(r * j / m_t)
                        us.append(d)
                        ss.append(s)
        P = PointSet.make(kind, params, np.array(ts), np.array(us), np.array(ss))
        keys = np.c_[P.t, P.u, P.sheet].round(12)
        _, first = np.unique(keys, axis=0, return_index=True)
        if first.size >= count or rest <= 0:
            return P.take(np.sort(first)[:count])
        extra += count - first.size + 4


def sample_points(kind, params: ModelParams, count: int, mode: str = "uniform", seed: int = 0):
    """List-of-ModelPoint form of :func:`sample_set`."""
    return sample_set(kind, params, count, mode, seed).to_points()


def nearest_boundary(x: ModelPoint):
    """Radial foot (r, u_x, sheet_x) and its distance r - t."""
    b = ModelPoint.make(x.kind, x.params, x.params.r, x.uvec, x.sheet)
    return b, x.params.r - x.t


# ---------------------------------------------------------------------------
# tangent frames and geodesic stepping in the disk chart


def tangent_frame(k: int, X: np.ndarray) -> np.ndarray:
    """Orthonormal frames (m, n, n+1) of the tangent spaces at chart points X."""
    X = np.atleast_2d(X)
    m, n1 = X.shape
    n = n1 - 1
    frames = np.zeros((m, n, n1))
    if k == 0:
        frames[:, :, 1:] = np.eye(n)[None]
        return frames
    for i in range(n):
        e = np.zeros(n1)
        e[i + 1] = 1.0
        # projection onto T_X under the ambient form
        v = e[None, :] - k * sf.form(k, X, e[None, :])[:, None] * X
        for j in range(i):
            v = v - sf.form(k, v, frames[:, j])[:, None] * frames[:, j]
        v /= np.sqrt(sf.form(k, v, v))[:, None]
        frames[:, i] = v
    return frames


def _geo(k, X, V, s):
    s = np.asarray(s, dtype=float)[..., None]
    if k == 1:
        return np.cos(s) * X + np.sin(s) * V, -np.sin(s) * X + np.cos(s) * V
    if k == 0:
        return X + s * V, V + 0.0 * s
    return np.cosh(s) * X + np.sinh(s) * V, np.sinh(s) * X + np.cosh(s) * V


def _radius(k, X):
    return chart_to_polar(k, X)[0]


def _outward(k, B):
    if k == 0:
        w = np.zeros_like(B)
        w[:, 1:] = B[:, 1:]
    else:
        e0 = np.zeros(B.shape[1])
        e0[0] = 1.0
        w = -(e0[None, :] - B[:, :1] * B)
    return w / np.sqrt(sf.form(k, w, w))[:, None]


def _glue_linear(kind: ModelKind, Y: np.ndarray) -> np.ndarray:
    Z = Y.copy()
    if kind is ModelKind.CROSSCAP:
        Z[:, 1:] *= -1.0
    elif kind is ModelKind.PURSE:
        Z[:, -1] *= -1.0
    return Z


def _rim_glide(k, r, u, W, s):
    """Move rim points with directions u along the rim by arclength s in the tangential part of W."""
    w = W[:, 1:] - np.sum(W[:, 1:] * u, axis=1, keepdims=True) * u
    nrm = np.linalg.norm(w, axis=1, keepdims=True)
    w = np.where(nrm > 0, w / np.where(nrm > 0, nrm, 1.0), 0.0)
    a = (s / sf.sn(k, r))[:, None]
    return polar_to_chart(k, np.full(u.shape[0], r), np.cos(a) * u + np.sin(a) * w)


def geodesic_step(P: PointSet, V: np.ndarray, s: float, strict: bool = True):
    """Move each point a distance s along the chart tangent V (unit).

    Geodesics leaving through the glued boundary are continued on the
    identified side with the radial velocity reflected. Returns the new
    point set and a mask of rows that crossed. On a single disk a step
    that leaves raises, or with ``strict=False`` stops at the rim and is
    flagged as crossed.
    """
    k, r = P.params.k, P.params.r
    X = P.chart()
    V = np.array(V, dtype=float, copy=True)
    sheet = P.sheet.copy()
    remaining = np.full(len(P), float(s))
    crossed = np.zeros(len(P), dtype=bool)
    for _ in range(4):
        Y, W = _geo(k, X, V, remaining)
        out = _radius(k, Y) > r * (1 + 1e-13)
        if not np.any(out):
            X, V = Y, W
            break
        if P.kind is ModelKind.DISK and strict:
            raise DomainError("geodesic step leaves the disk")
        X_in, V_in = Y.copy(), W.copy()
        idx = np.flatnonzero(out)
        lo = np.zeros(idx.size)
        hi = remaining[idx].copy()
        x0, v0 = X[idx], V[idx]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = _radius(k, _geo(k, x0, v0, mid)[0]) <= r
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        B, Wb = _geo(k, x0, v0, lo)
        t_b, u_b = chart_to_polar(k, B)
        B = polar_to_chart(k, np.full(idx.size, r), u_b)
        if P.kind is ModelKind.DISK:
            X_in[idx], V_in[idx] = B, Wb
            crossed[idx] = True
            X, V = X_in, V_in
            break
        nb = _outward(k, B)
        alpha = sf.form(k, Wb, nb)
        graze = np.abs(alpha) < 1e-6
        if np.any(graze):
            # tangential exit: the rest of the step glides along the rim
            g = idx[graze]
            B[graze] = _rim_glide(k, r, u_b[graze], Wb[graze], remaining[g] - lo[graze])
            X_in[g], V_in[g] = B[graze], Wb[graze]
            remaining[g] = lo[graze]
        Wb = Wb - 2.0 * alpha[:, None] * nb
        B = _glue_linear(P.kind, B)
        Wb = _glue_linear(P.kind, Wb)
        if P.kind is ModelKind.DOUBLE_DISK:
            sheet[idx] = -sheet[idx]
        X_in[idx], V_in[idx] = B, Wb
        rem_new = np.zeros(len(P))
        rem_new[idx] = remaining[idx] - lo
        if np.any(graze):
            X_in[idx[graze]] = B[graze]
            rem_new[idx[graze]] = 0.0
            if P.kind is ModelKind.DOUBLE_DISK:
                sheet[idx[graze]] = -sheet[idx[graze]]
        X, V, remaining = X_in, V_in, rem_new
        crossed[idx] = True
        if not np.any(rem_new > 0):
            break
    t, u = chart_to_polar(k, X)
    return PointSet.make(P.kind, P.params, np.minimum(t, r), u, sheet), crossed


def log_directions(P: PointSet, Q: PointSet, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    """Unit chart tangents at P[i] of a minimizing path towards Q[i]."""
    k, r, n = P.params.k, P.params.r, P.params.n
    _, crossed, theta = pair_distances(P, Q, opts, return_crossing=True)
    X = P.chart()
    target = Q.chart()
    if np.any(crossed):
        idx = np.flatnonzero(crossed)
        u1 = P.u[idx]
        u2 = Q.u[idx] if P.kind is ModelKind.DOUBLE_DISK else _glue_image_u(P.kind, Q.u[idx])
        perp = u2 - np.sum(u1 * u2, axis=1, keepdims=True) * u1
        pn = np.linalg.norm(perp, axis=1)
        fallback = pn < 1e-14
        if np.any(fallback):
            alt = np.zeros((int(fallback.sum()), n))
            ax = np.argmin(np.abs(u1[fallback]), axis=1)
            alt[np.arange(alt.shape[0]), ax] = 1.0
            alt -= np.sum(alt * u1[fallback], axis=1, keepdims=True) * u1[fallback]
            perp[fallback] = alt
            pn[fallback] = np.linalg.norm(alt, axis=1)
        perp /= pn[:, None]
        b = np.cos(theta[idx])[:, None] * u1 + np.sin(theta[idx])[:, None] * perp
        target[idx] = polar_to_chart(k, np.full(idx.size, r), b)
    if k == 0:
        w = target - X
        w[:, 0] = 0.0
    else:
        w = target - k * sf.form(k, X, target)[:, None] * X
    nrm = np.sqrt(np.maximum(sf.form(k, w, w), 0.0))
    return w / np.where(nrm > 0, nrm, 1.0)[:, None]


# ---------------------------------------------------------------------------
# metric balls


def sample_ball(center: ModelPoint, radius: float, count: int, rng: np.random.Generator,
                opts: SolverOpts = DEFAULT_OPTS) -> PointSet:
    """Volume-uniform samples of the intrinsic ball B(center, radius).

    Proposals come from the space-form balls around every lift of the
    center that reaches the glued rim; acceptance uses the intrinsic
    distance and divides out proposal overlap.
    """
    params, kind = center.params, center.kind
    k, r, n = params.k, params.r, params.n
    if not radius > 0:
        raise DomainError("ball radius must be positive")
    lifts = [(center.chart(), center.sheet)]
    if center.t + radius > r and kind is not ModelKind.DISK:
        if kind is ModelKind.DOUBLE_DISK:
            lifts.append((center.chart(), -center.sheet))
        else:
            lifts.append((_glue_linear(kind, center.chart()[None])[0], 1))
    cpoint = PointSet.from_points([center])
    got_t, got_u, got_s = [], [], []
    total = 0
    guard = 0
    while total < count:
        guard += 1
        if guard > 10_000:
            raise NumericalError("ball rejection sampler stalled")
        m = max(2 * (count - total), 256)
        which = rng.integers(len(lifts), size=m)
        rho = _sample_radii(ModelParams(n, k, min(radius, r)) if k != 1 else ModelParams(n, k, min(radius, 1.5)),
                            m, rng, rmax=radius)
        dirs = _sphere_dirs(n, m, rng)
        t_out, u_out, s_out = [], [], []
        for li, (Xc, sh) in enumerate(lifts):
            sel = which == li
            if not np.any(sel):
                continue
            F = tangent_frame(k, Xc[None])[0]
            V = dirs[sel] @ F
            Y, _ = _geo(k, np.repeat(Xc[None], sel.sum(), axis=0), V, rho[sel])
            t, u = chart_to_polar(k, Y)
            t_out.append(t)
            u_out.append(u)
            s_out.append(np.full(t.size, sh))
        t = np.concatenate(t_out)
        u = np.concatenate(u_out)
        s = np.concatenate(s_out)
        inside = t <= r
        t, u, s = t[inside], u[inside], s[inside]
        if t.size == 0:
            continue
        Q = PointSet.make(kind, params, t, u, s if kind is ModelKind.DOUBLE_DISK else None)
        d = pair_distances(cpoint.repeat(len(Q)), Q, opts)
        keep = d <= radius
        if len(lifts) > 1 and kind is not ModelKind.DOUBLE_DISK:
            # a point reachable from both proposal balls was proposed twice
            other = np.array([_glue_linear(kind, center.chart()[None])[0]])
            Xq = polar_to_chart(k, Q.t, Q.u)
            d0 = _chart_dist(k, Xq, center.chart()[None])
            d1 = _chart_dist(k, Xq, other)
            both = (d0 <= radius) & (d1 <= radius)
            keep &= ~both | (rng.random(len(Q)) < 0.5)
        Q = Q.take(np.flatnonzero(keep))
        got_t.append(Q.t)
        got_u.append(Q.u)
        got_s.append(Q.sheet)
        total += len(Q)
    P = PointSet(kind, params, np.concatenate(got_t), np.concatenate(got_u), np.concatenate(got_s))
    return P.take(np.arange(count))


def _chart_dist(k, X, Y):
    d = X - Y
    if k == 0:
        return np.linalg.norm(d, axis=1)
    if k == 1:
        return 2.0 * np.arctan2(np.linalg.norm(d, axis=1), np.linalg.norm(X + Y, axis=1))
    q = np.maximum(sf.form(-1, d, d), 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(q))


# ---------------------------------------------------------------------------
# text records


def format_point(x: ModelPoint) -> str:
    """``kind k n r t u... sheet`` with 17 significant digits."""
    p = x.params
    fields = [x.kind.value, str(p.k), str(p.n), f"{p.r:.17g}", f"{x.t:.17g}"]
    fields += [f"{c:.17g}" for c in x.u]
    fields.append("+" if x.sheet == 1 else "-")
    return " ".join(fields)


def parse_point(line: str) -> ModelPoint:
    parts = line.split()
    if len(parts) < 6:
        raise DomainError(f"malformed point record: {line!r}")
    kind = ModelKind.parse(parts[0])
    k, n = int(parts[1]), int(parts[2])
    if len(parts) != 6 + n:
        raise DomainError(f"expected {6 + n} fields, got {len(parts)}")
    params = ModelParams(n, k, float(parts[3]))
    t = float(parts[4])
    u = [float(c) for c in parts[5:5 + n]]
    sheet = {"+": 1, "-": -1, "1": 1, "-1": -1}.get(parts[-1])
    if sheet is None:
        raise DomainError(f"bad sheet marker {parts[-1]!r}")
    return ModelPoint.make(kind, params, t, u, sheet)
