"""Strainers, comparison angles and distance charts on finite metric spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from . import spaceform as sf
from .calculus import frame_gradients
from .errors import DegeneracyError, DomainError, SetupError
from .modelspace import (
    DEFAULT_OPTS,
    ModelPoint,
    PointSet,
    SolverOpts,
    distance_matrix,
    pair_distances,
    sample_ball,
    sample_set,
)

TRIANGLE_TOL = 1e-9
PSI_FLOOR = 1e-6


@dataclass
class FiniteMetricSpace:
    """Labelled distance matrix with a curvature lower-bound tag.

    The triangle inequality is checked on construction against the
    shortest-path closure of the matrix.
    """

    dist: np.ndarray
    curv_lb: int = 0
    labels: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        D = np.array(self.dist, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise DomainError("distance matrix must be square")
        if not np.all(np.isfinite(D)) or np.any(D < 0):
            raise DomainError("distances must be finite and nonnegative")
        if np.any(np.abs(D - D.T) > TRIANGLE_TOL * max(1.0, D.max(initial=0.0))):
            raise DomainError("distance matrix is not symmetric")
        if np.any(np.diag(D) != 0):
            raise DomainError("distance matrix needs a zero diagonal")
        D = 0.5 * (D + D.T)
        self.curv_lb = sf.check_curvature(self.curv_lb)
        if D.shape[0] > 2:
            closure = shortest_path(D, method="FW", directed=False)
            gap = float(np.max(D - closure))
            if gap > TRIANGLE_TOL:
                raise DomainError(f"triangle inequality violated by {gap:.3g}")
        D.setflags(write=False)
        self.dist = D
        if self.labels is None:
            self.labels = list(range(D.shape[0]))
        elif len(self.labels) != D.shape[0]:
            raise DomainError("label count does not match the matrix")

    def __len__(self):
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.dist.max(initial=0.0))

    def subspace(self, idx) -> "FiniteMetricSpace":
        idx = np.asarray(idx)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], self.curv_lb, [self.labels[i] for i in idx])


class ModelMetricSpace(FiniteMetricSpace):
    """Finite sample of a model space, keeping the points for ball sampling."""

    def __init__(self, points: PointSet, opts: SolverOpts = DEFAULT_OPTS):
        self.points = points
        self.opts = opts
        super().__init__(distance_matrix(points, opts=opts), points.params.k)


def _pts(S):
    pts = getattr(S, "points", None)
    if pts is None:
        raise SetupError("this operation needs a model-backed metric space")
    return pts


# ---------------------------------------------------------------------------
# angles and strainers


def cmp_angle_metric(S: FiniteMetricSpace, a: int, x: int, b: int) -> float:
    """Comparison angle at x of the triple (a, x, b) at curvature curv_lb."""
    if a == x or b == x or a == b:
        raise DegeneracyError("comparison angle needs three distinct points")
    D = S.dist
    return sf.comparison_angle(S.curv_lb, D[x, a], D[x, b], D[a, b])


@dataclass(frozen=True)
class StrainerSpec:
    x: int
    pairs: tuple
    delta: float
    r: float

    def __post_init__(self):
        if not self.delta > 0 or not self.r > 0:
            raise DomainError("strainer delta and r must be positive")
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))

    @property
    def n(self) -> int:
        return len(self.pairs)

    @property
    def anchors(self):
        return [a for a, _ in self.pairs]


@dataclass(frozen=True)
class StrainReport:
    ok: bool
    margin: float
    angle_margin: float
    distance_margin: float
    tightest: str


def _slacks(S: FiniteMetricSpace, x: int, pairs, delta: float, r: float):
    """All inequality slacks of the strainer definition, labelled."""
    out = []
    D = S.dist
    for i, (a, b) in enumerate(pairs):
        for p in (a, b):
            if p == x:
                out.append((f"dist(p{i},x)", -r))
            else:
                out.append((f"dist(p{i},x)", D[x, p] - r))
        out.append((f"opp({i})", _safe_angle(S, a, x, b) - (math.pi - delta)))
        for j, (c, d) in enumerate(pairs):
            if j <= i:
                continue
            for name, (p, q) in (("aa", (a, c)), ("bb", (b, d)), ("ab", (a, d)), ("ba", (b, c))):
                out.append((f"{name}({i},{j})", _safe_angle(S, p, x, q) - (math.pi / 2 - delta)))
    return out


def _safe_angle(S, a, x, b) -> float:
    try:
        return cmp_angle_metric(S, a, x, b)
    except (DegeneracyError, DomainError):
        return -math.inf


def is_strained(S: FiniteMetricSpace, spec: StrainerSpec) -> StrainReport:
    """Check every inequality of the (n, delta, r)-strainer definition at x.

    The margin is the smallest slack (radians for angles, length units for
    the distance condition); the verdict is margin > 0.
    """
    sl = _slacks(S, spec.x, spec.pairs, spec.delta, spec.r)
    ang = [v for name, v in sl if not name.startswith("dist")]
    dst = [v for name, v in sl if name.startswith("dist")]
    name, worst = min(sl, key=lambda p: p[1])
    return StrainReport(
        ok=bool(worst > 0),
        margin=float(worst),
        angle_margin=float(min(ang)) if ang else math.inf,
        distance_margin=float(min(dst)),
        tightest=name,
    )


def find_strainer(S: FiniteMetricSpace, x: int, n: int, delta: float, r: float):
    """Greedy strainer search at x, one pair per dimension.

    Each step picks the pair maximizing the smallest slack against the
    pairs chosen so far; ties go to the lexicographically smallest pair.
    Returns None once no pair has positive slack.
    """
    pairs = _greedy_pairs(S, S.dist[x], n, delta, r, exclude=x)
    if pairs is None:
        return None
    return StrainerSpec(x, pairs, delta, r)


def find_strainer_external(S: FiniteMetricSpace, dx, n: int, delta: float, r: float):
    """Strainer pairs from S for an outside point with distances ``dx`` to S."""
    return _greedy_pairs(S, np.asarray(dx, dtype=float), n, delta, r)


def _greedy_pairs(S, dx, n, delta, r, exclude=None):
    cand = np.flatnonzero(dx > r)
    if exclude is not None:
        cand = cand[cand != exclude]
    if cand.size < 2 * n:
        return None
    D = S.dist
    A = sf.comparison_angles(S.curv_lb, dx[cand][:, None], dx[cand][None, :], D[np.ix_(cand, cand)])
    A = np.where(np.isnan(A), -np.inf, A)
    np.fill_diagonal(A, -np.inf)
    chosen = []
    used = np.zeros(cand.size, dtype=bool)
    for _ in range(n):
        M = A - (math.pi - delta)
        for a, b in chosen:
            col = np.minimum(A[:, a], A[:, b]) - (math.pi / 2 - delta)
            M = np.minimum(M, col[:, None])
            M = np.minimum(M, col[None, :])
        M[used, :] = -np.inf
        M[:, used] = -np.inf
        M = np.triu(M, 1) + np.tril(np.full_like(M, -np.inf))
        best = M.max()
        if not best > 0:
            return None
        ia, ib = np.argwhere(M == best)[0]
        chosen.append((ia, ib))
        used[[ia, ib]] = True
    return [(int(cand[a]), int(cand[b])) for a, b in chosen]


# ---------------------------------------------------------------------------
# distance charts


class BGPChart:
    """x -> (dist(a_1, x), ..., dist(a_n, x)) for a strainer's a-points."""

    def __init__(self, S: FiniteMetricSpace, spec: StrainerSpec):
        self.S = S
        self.spec = spec
        self.anchors = spec.anchors

    def __call__(self, x):
        """Chart of sample indices, or of model points if S is model-backed."""
        if isinstance(x, PointSet):
            pts = _pts(self.S)
            cols = [pair_distances(pts.take([a]).repeat(len(x)), x, self.S.opts) for a in self.anchors]
            return np.stack(cols, axis=-1)
        return self.S.dist[np.asarray(x)][..., self.anchors]

    def distortion(self, pairs=None, points: PointSet | None = None, dist=None) -> float:
        """max |chart distance / metric distance - 1| over distinct pairs.

        Either index pairs into S, or model points with their distance
        matrix ``dist``.
        """
        if points is not None:
            C = self(points)
            D = dist if dist is not None else distance_matrix(points, opts=self.S.opts)
            i, j = np.triu_indices(len(points), 1)
        else:
            pairs = np.asarray(pairs)
            i, j = pairs[:, 0], pairs[:, 1]
            C = self.S.dist[:, self.anchors]
            D = self.S.dist
        d = D[i, j]
        keep = d > 0
        ratio = np.linalg.norm(C[i[keep]] - C[j[keep]], axis=1) / d[keep]
        return float(np.max(np.abs(ratio - 1.0))) if ratio.size else 0.0


def bgp_chart(S: FiniteMetricSpace, spec: StrainerSpec) -> BGPChart:
    return BGPChart(S, spec)


def distortion_estimate(chart: BGPChart, pairs) -> float:
    return chart.distortion(pairs)


class OtsuShioyaChart:
    """Distance chart with each anchor averaged over a small metric ball."""

    def __init__(self, S: FiniteMetricSpace, spec: StrainerSpec, eta: float, mc_samples: int, seed: int):
        pts = _pts(S)
        if not eta > 0:
            raise DomainError("eta must be positive")
        if mc_samples < 1:
            raise DomainError("mc_samples must be >= 1")
        self.S, self.spec, self.eta = S, spec, eta
        self.opts = S.opts
        self.balls = []
        for i, a in enumerate(spec.anchors):
            rng = np.random.default_rng([seed, i])
            self.balls.append(sample_ball(pts.point(a), eta, mc_samples, rng, S.opts))

    def __call__(self, P: PointSet) -> np.ndarray:
        m = len(P)
        cols = []
        for B in self.balls:
            s = len(B)
            d = pair_distances(P.repeat(s), B.take(np.tile(np.arange(s), m)), self.opts)
            cols.append(d.reshape(m, s).mean(axis=1))
        return np.stack(cols, axis=-1)

    def standard_errors(self, P: PointSet) -> np.ndarray:
        m = len(P)
        cols = []
        for B in self.balls:
            s = len(B)
            d = pair_distances(P.repeat(s), B.take(np.tile(np.arange(s), m)), self.opts).reshape(m, s)
            cols.append(d.std(axis=1, ddof=1) / math.sqrt(s) if s > 1 else np.zeros(m))
        return np.stack(cols, axis=-1)

    def jacobian(self, P: PointSet, h: float):
        """Chart Jacobians (m, n, n) in orthonormal tangent frames, plus frames."""
        return frame_gradients(self, P, h)


def strained_ball_distortion(kind, params, samples: int, delta: float, r: float, chart_radius: float,
                             chart_points: int, seed: int, opts: SolverOpts = DEFAULT_OPTS):
    """Strain a sample point at half depth on the + sheet and measure its BGP chart.

    Returns ``(S, spec, distortion)``; distortion is over a seeded sample of
    the intrinsic ball of radius ``chart_radius`` about the strained point,
    and is NaN when no strainer is found.
    """
    S = ModelMetricSpace(sample_set(kind, params, samples, "uniform", seed), opts)
    x = int(np.argmin(np.abs(S.points.t - 0.5 * params.r) + (S.points.sheet < 0)))
    spec = find_strainer(S, x, params.n, delta, r)
    if spec is None:
        return S, None, math.nan
    ball = sample_ball(S.points.point(x), chart_radius, chart_points, np.random.default_rng([seed, 9]), opts)
    return S, spec, BGPChart(S, spec).distortion(points=ball)


def otsu_shioya_chart(S, spec, eta, mc_samples, seed) -> OtsuShioyaChart:
    return OtsuShioyaChart(S, spec, eta, mc_samples, seed)


# ---------------------------------------------------------------------------
# global strainers on spaces with curvature >= 1


@dataclass(frozen=True)
class GlobalStrainerSpec:
    A: tuple
    B: tuple
    delta: float

    def __post_init__(self):
        if len(self.A) != len(self.B) or not self.A:
            raise DomainError("need the same positive number of A and B subsets")
        object.__setattr__(self, "A", tuple(tuple(int(i) for i in a) for a in self.A))
        object.__setattr__(self, "B", tuple(tuple(int(i) for i in b) for b in self.B))

    @property
    def m(self) -> int:
        return len(self.A)

    def margin(self, S: FiniteMetricSpace) -> float:
        """Smallest slack of the two defining inequality families."""
        D = S.dist
        worst = math.inf
        for i in range(self.m):
            for a in self.A[i]:
                for b in self.B[i]:
                    worst = min(worst, D[a, b] - (math.pi - self.delta))
                for j in range(self.m):
                    if j == i:
                        continue
                    for b in self.B[j]:
                        worst = min(worst, self.delta - abs(D[a, b] - math.pi / 2))
        return float(worst)


class SphereMap:
    """(sum cos^2 d(A_i, x))^(-1/2) (cos d(A_i, x))_i into S^{m-1}."""

    def __init__(self, S: FiniteMetricSpace, gspec: GlobalStrainerSpec):
        if S.curv_lb != 1:
            raise DomainError("the sphere map needs curvature bounded below by 1")
        self.S, self.gspec = S, gspec

    def raw(self, idx=None) -> np.ndarray:
        D = self.S.dist
        idx = np.arange(len(self.S)) if idx is None else np.asarray(idx)
        cols = [np.cos(D[np.ix_(idx, list(a))].min(axis=1)) for a in self.gspec.A]
        return np.stack(cols, axis=-1)

    def __call__(self, idx=None) -> np.ndarray:
        c = self.raw(idx)
        s = np.sum(c * c, axis=-1)
        if np.any(s < PSI_FLOOR):
            raise DomainError("normalization vanishes; the A_i do not strain this point")
        return c / np.sqrt(s)[:, None]

    def distortion(self, pairs=None) -> float:
        Y = self()
        if pairs is None:
            i, j = np.triu_indices(len(self.S), 1)
        else:
            pairs = np.asarray(pairs)
            i, j = pairs[:, 0], pairs[:, 1]
        d = self.S.dist[i, j]
        keep = d > 0
        chord = np.linalg.norm(Y[i[keep]] - Y[j[keep]], axis=1)
        sph = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
        return float(np.max(np.abs(sph / d[keep] - 1.0))) if sph.size else 0.0


def sphere_map_psi(S: FiniteMetricSpace, gspec: GlobalStrainerSpec) -> SphereMap:
    return SphereMap(S, gspec)


def angle_sum_defect(S: FiniteMetricSpace, y1: int, y2: int, x: int, z: int) -> float:
    """|angle(y1, x, z) + angle(y2, x, z) - pi| for a 1-strainer (y1, y2) at x."""
    return abs(cmp_angle_metric(S, y1, x, z) + cmp_angle_metric(S, y2, x, z) - math.pi)


# ---------------------------------------------------------------------------
# file format: header "n curv_lb", then the strict upper triangle row by row


def write_metric_space(S: FiniteMetricSpace, path) -> None:
    n = len(S)
    lines = [f"{n} {S.curv_lb}"]
    for i in range(n - 1):
        lines.append(" ".join(f"{v:.17g}" for v in S.dist[i, i + 1:]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_metric_space(path) -> FiniteMetricSpace:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise DomainError("metric space file needs a header 'n curv_lb'")
    n, k = int(tokens[0]), int(tokens[1])
    vals = np.array([float(v) for v in tokens[2:]])
    D = np.zeros((n, n))
    if vals.size == n * (n - 1) // 2:
        D[np.triu_indices(n, 1)] = vals
    elif vals.size == n * (n + 1) // 2:
        D[np.triu_indices(n)] = vals
        if np.any(np.diag(D) != 0):
            raise DomainError("diagonal entries must be zero")
    else:
        raise DomainError(f"expected {n * (n - 1) // 2} upper-triangle entries, got {vals.size}")
    return FiniteMetricSpace(D + D.T, k)
