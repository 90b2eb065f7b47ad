"""Simply connected space forms of curvature k in {-1, 0, 1}.

Points live in R^{n+1} with basis e_0, ..., e_n:

* k = 1: the unit sphere S^n.
* k = 0: the affine slices {+-e_0} x R^n.
* k = -1: the two sheets H^n_{+-} of the hyperboloid -x_0^2 + |x'|^2 = -1.

Scalar operations take :class:`SpaceFormPoint` / :class:`TangentVector`.
The vectorized helpers (``polar_distance``, ``comparison_angles``, ``sn``)
work on numpy arrays and are what the model-space code builds on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import AmbiguityError, DegeneracyError, DomainError

CURVATURES = (-1, 0, 1)
CLAMP_TOL = 1e-12
_POINT_TOL = 1e-12
_UNIT_TOL = 1e-9
# k=1 log map refuses pairs closer than this to antipodal.
ANTIPODAL_GUARD = 1e-6


def check_curvature(k) -> int:
    if k not in CURVATURES or isinstance(k, bool):
        raise DomainError(f"curvature must be one of -1, 0, 1 (got {k!r})")
    return int(k)


def form(k: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Ambient bilinear form: Euclidean for k >= 0, Minkowski for k = -1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.sum(x * y, axis=-1)
    if k == -1:
        s = s - 2.0 * x[..., 0] * y[..., 0]
    return s


@dataclass(frozen=True, eq=False)
class SpaceFormPoint:
    k: int
    coords: np.ndarray

    def __post_init__(self):
        k = check_curvature(self.k)
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise DomainError("a space-form point needs at least 2 coordinates")
        if not np.all(np.isfinite(c)):
            raise DomainError("non-finite coordinates")
        scale = max(1.0, float(np.dot(c, c)))
        if k == 1:
            if abs(float(np.dot(c, c)) - 1.0) > _POINT_TOL * scale:
                raise DomainError("k=1 point must lie on the unit sphere")
        elif k == 0:
            if c[0] not in (1.0, -1.0):
                raise DomainError("k=0 point must have x_0 = +1 or -1")
        else:
            if abs(float(form(-1, c, c)) + 1.0) > _POINT_TOL * scale or c[0] == 0.0:
                raise DomainError("k=-1 point must lie on the hyperboloid")
        c.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.size - 1

    @property
    def component(self) -> int:
        """+1 / -1 for the sheet (k = 0, -1); always +1 on the sphere."""
        if self.k == 1:
            return 1
        return 1 if self.coords[0] > 0 else -1

    def __eq__(self, other):
        if not isinstance(other, SpaceFormPoint):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.k, self.coords.tobytes()))

    def __repr__(self):
        return f"SpaceFormPoint(k={self.k}, coords={self.coords.tolist()})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: SpaceFormPoint
    comps: np.ndarray

    def __post_init__(self):
        v = np.array(self.comps, dtype=float).reshape(-1)
        if v.size != self.base.coords.size:
            raise DomainError("tangent vector has the wrong dimension")
        k = self.base.k
        x = self.base.coords
        if k == 0:
            if abs(v[0]) > _UNIT_TOL:
                raise DomainError("k=0 tangent vectors have zero e_0 component")
        elif abs(float(form(k, x, v))) > _UNIT_TOL * max(1.0, float(np.linalg.norm(v))):
            raise DomainError("vector is not tangent at its base point")
        v.setflags(write=False)
        object.__setattr__(self, "comps", v)

    @property
    def norm(self) -> float:
        return math.sqrt(max(float(form(self.base.k, self.comps, self.comps)), 0.0))


def pole(k: int, n: int, sign: int = 1) -> SpaceFormPoint:
    """The point sign * e_0 (the center of the + or - model disk)."""
    c = np.zeros(n + 1)
    c[0] = float(sign)
    return SpaceFormPoint(k, c)


def from_polar(k: int, t: float, u, sign: int = 1) -> SpaceFormPoint:
    """exp_{sign e_0}(t u) for a unit u in e_0-perp (given as an n-vector)."""
    k = check_curvature(k)
    u = np.asarray(u, dtype=float)
    c = np.empty(u.size + 1)
    if k == 1:
        c[0] = sign * math.cos(t)
        c[1:] = math.sin(t) * u
    elif k == 0:
        c[0] = float(sign)
        c[1:] = t * u
    else:
        c[0] = sign * math.cosh(t)
        c[1:] = math.sinh(t) * u
    return SpaceFormPoint(k, c)


def _same_component(x: SpaceFormPoint, y: SpaceFormPoint):
    if x.k != y.k:
        raise DomainError("points have different curvature")
    if x.coords.size != y.coords.size:
        raise DomainError("points have different dimension")
    if x.k != 1 and x.component != y.component:
        raise DomainError("points lie on different components")


def _chord(k: int, x: np.ndarray, y: np.ndarray) -> float:
    """|x - y| in the ambient form; nonnegative up to the clamp tolerance."""
    d = x - y
    q = float(form(k, d, d))
    if q < 0.0:
        if q < -CLAMP_TOL:
            raise DomainError(f"negative squared chord {q:g}")
        q = 0.0
    return math.sqrt(q)


def distance(x: SpaceFormPoint, y: SpaceFormPoint) -> float:
    """Intrinsic distance between two points of the same space form."""
    _same_component(x, y)
    k = x.k
    if k == 0:
        return float(np.linalg.norm(x.coords - y.coords))
    if k == 1:
        a = float(np.linalg.norm(x.coords - y.coords))
        b = float(np.linalg.norm(x.coords + y.coords))
        return 2.0 * math.atan2(a, b)
    return 2.0 * math.asinh(0.5 * _chord(-1, x.coords, y.coords))


def exp_map(x: SpaceFormPoint, v: TangentVector, t: float) -> SpaceFormPoint:
    """Point at arc length t along the geodesic with unit initial velocity v."""
    if v.base != x:
        raise DomainError("tangent vector is based at a different point")
    if abs(v.norm - 1.0) > _UNIT_TOL:
        raise DomainError(f"direction must be a unit vector (norm {v.norm:.3g})")
    k = x.k
    if k == 1:
        c = math.cos(t) * x.coords + math.sin(t) * v.comps
        c = c / np.linalg.norm(c)
    elif k == 0:
        c = x.coords + t * v.comps
        c[0] = x.coords[0]
    else:
        c = math.cosh(t) * x.coords + math.sinh(t) * v.comps
        c[0] = math.copysign(math.sqrt(1.0 + float(np.dot(c[1:], c[1:]))), x.coords[0])
    return SpaceFormPoint(k, c)


def log_map(x: SpaceFormPoint, y: SpaceFormPoint) -> TangentVector:
    """Unit initial direction at x of the segment from x to y."""
    _same_component(x, y)
    k = x.k
    d = distance(x, y)
    if d == 0.0:
        raise DegeneracyError("log_map of coincident points")
    if k == 1 and d > math.pi - ANTIPODAL_GUARD:
        raise AmbiguityError("antipodal points are joined by many segments")
    if k == 0:
        w = y.coords - x.coords
    else:
        # remove the component along x under the ambient form
        w = y.coords - k * float(form(k, x.coords, y.coords)) * x.coords
    nrm = math.sqrt(max(float(form(k, w, w)), 0.0))
    if nrm == 0.0:
        raise DegeneracyError("log_map direction vanished numerically")
    w = w / nrm
    if k == 0:
        w[0] = 0.0
    return TangentVector(x, w)


# ---------------------------------------------------------------------------
# vectorized helpers in normal (polar) coordinates about a common center


def sn(k: int, t):
    """sin / identity / sinh."""
    t = np.asarray(t, dtype=float)
    if k == 1:
        return np.sin(t)
    if k == 0:
        return t
    return np.sinh(t)


def polar_distance(k: int, t1, t2, angle):
    """Distance between (t1, u1) and (t2, u2) with angle(u1, u2) = angle.

    Half-angle form of the law of cosines, stable for small separations.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    s2 = np.sin(0.5 * np.asarray(angle, dtype=float)) ** 2
    if k == 0:
        return np.sqrt((t1 - t2) ** 2 + 4.0 * t1 * t2 * s2)
    if k == 1:
        h = np.sin(0.5 * (t1 - t2)) ** 2 + np.sin(t1) * np.sin(t2) * s2
        return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    h = np.sinh(0.5 * (t1 - t2)) ** 2 + np.sinh(t1) * np.sinh(t2) * s2
    return 2.0 * np.arcsinh(np.sqrt(h))


def unit_angle(u1, u2):
    """Angle between unit vectors along the last axis, accurate near 0 and pi."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    a = np.linalg.norm(u1 - u2, axis=-1)
    b = np.linalg.norm(u1 + u2, axis=-1)
    return 2.0 * np.arctan2(a, b)


def _half_angle_terms(k: int, d_xy, d_xz, d_yz):
    """Numerators of sin^2 and cos^2 of half the angle at x (common denominator dropped).

    sin^2 ~ sn(s - a) sn(s - b), cos^2 ~ sn(s) sn(s - c) with s the half
    perimeter; atan2 of their roots is accurate near both 0 and pi.
    """
    s = 0.5 * (d_xy + d_xz + d_yz)
    f = {0: lambda v: v, 1: np.sin, -1: np.sinh}[k]
    return f(s - d_xy) * f(s - d_xz), f(s) * f(s - d_yz)


def _half_angle(sin_num, cos_num):
    return 2.0 * np.arctan2(np.sqrt(np.maximum(sin_num, 0.0)), np.sqrt(np.maximum(cos_num, 0.0)))


def comparison_angle(k: int, d_xy: float, d_xz: float, d_yz: float) -> float:
    """Angle at x of the k-plane triangle with the given side lengths.

    d_yz is the side opposite the vertex.
    """
    k = check_curvature(k)
    sides = (float(d_xy), float(d_xz), float(d_yz))
    if min(sides) < 0 or not all(math.isfinite(s) for s in sides):
        raise DomainError("side lengths must be finite and nonnegative")
    if d_xy == 0.0 or d_xz == 0.0:
        raise DegeneracyError("comparison angle needs nonzero sides at the vertex")
    a, b, c = sides
    if a > b + c + CLAMP_TOL or b > a + c + CLAMP_TOL or c > a + b + CLAMP_TOL:
        raise DomainError("side lengths violate the triangle inequality")
    if k == 1 and a + b + c > 2.0 * math.pi + CLAMP_TOL:
        raise DomainError("spherical triangle perimeter exceeds 2 pi")
    sin_num, cos_num = _half_angle_terms(k, a, b, c)
    if sin_num <= 0.0 and cos_num <= 0.0:
        raise DegeneracyError("comparison angle is undetermined for this triangle")
    return float(_half_angle(sin_num, cos_num))


def comparison_angles(k: int, d_xy, d_xz, d_yz):
    """Vectorized :func:`comparison_angle`; degenerate entries become NaN.

    Triangle-inequality violations up to CLAMP_TOL are clamped, larger ones
    give NaN rather than raising so that batch scans can report them.
    """
    d_xy = np.asarray(d_xy, dtype=float)
    d_xz = np.asarray(d_xz, dtype=float)
    d_yz = np.asarray(d_yz, dtype=float)
    sin_num, cos_num = _half_angle_terms(k, d_xy, d_xz, d_yz)
    bad = (d_xy <= 0) | (d_xz <= 0)
    bad |= (d_xy > d_xz + d_yz + CLAMP_TOL) | (d_xz > d_xy + d_yz + CLAMP_TOL)
    bad |= d_yz > d_xy + d_xz + CLAMP_TOL
    bad |= (sin_num <= 0) & (cos_num <= 0)
    with np.errstate(invalid="ignore"):
        out = _half_angle(sin_num, cos_num)
    return np.where(bad, np.nan, out)


# ---------------------------------------------------------------------------
# volumes


def sphere_area(n: int) -> float:
    """vol(S^{n-1}), the area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@lru_cache(maxsize=4096)
def _ball_volume(n: int, k: int, r: float) -> float:
    if n == 1:
        return 2.0 * r
    if k == 0:
        return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * r**n
    if n == 2:
        return 2.0 * math.pi * ((1.0 - math.cos(r)) if k == 1 else (math.cosh(r) - 1.0))
    if n == 3:
        if k == 1:
            return math.pi * (2.0 * r - math.sin(2.0 * r))
        return math.pi * (math.sinh(2.0 * r) - 2.0 * r)
    f = math.sin if k == 1 else math.sinh
    val, _ = integrate.quad(lambda s: f(s) ** (n - 1), 0.0, r, epsabs=0.0, epsrel=1e-12, limit=200)
    return sphere_area(n) * val


def ball_volume(n: int, k: int, r: float) -> float:
    """Volume of a metric r-ball in the n-dimensional k space form."""
    k = check_curvature(k)
    if n < 1:
        raise DomainError("dimension must be >= 1")
    if not r > 0:
        raise DomainError("radius must be positive")
    if k == 1 and r >= math.pi:
        raise DomainError("spherical balls need r < pi")
    return _ball_volume(int(n), k, float(r))


__all__ = [
    "CURVATURES",
    "SpaceFormPoint",
    "TangentVector",
    "ball_volume",
    "check_curvature",
    "comparison_angle",
    "comparison_angles",
    "distance",
    "exp_map",
    "form",
    "from_polar",
    "log_map",
    "polar_distance",
    "pole",
    "sn",
    "sphere_area",
    "unit_angle",
]
