"""The purse map Psi = (f_1, ..., f_{n-1}), its radial projection and fibers.

On the purse the reference points p_1..p_{n-1} lie on the singular sphere
S (rim points fixed by R), so Psi is equivariant under A (Psi o A = -Psi)
and for k = 0 it is the orthogonal projection to the first n-1 axes.
Fibers of Psi over interior targets are circles; they are extracted here
by rejection on a dense grid and analysed as graphs.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial import cKDTree

from . import spaceform as sf
from .calculus import directional_derivatives
from .embedding import ProfileH, ScanConfig, f_values
from .errors import DomainError, ResolutionError, SetupError
from .ghlab import _tree_coords
from .modelspace import (
    DEFAULT_OPTS,
    ModelKind,
    ModelParams,
    ModelPoint,
    PointSet,
    SolverOpts,
    base_points,
    chart_to_polar,
    format_point,
    log_directions,
    pair_distances,
    polar_to_chart,
    sample_set,
    tangent_frame,
)
from .report import ScanReport
from .strainer import ModelMetricSpace, find_strainer_external

PURSE = ModelKind.PURSE


class Region(str, Enum):
    E0 = "E0"
    E1 = "E1"
    BOTH = "both"


@dataclass(frozen=True)
class PurseRegionSpec:
    epsilon: float
    region: str = "E0"

    def validate(self, params: ModelParams) -> "PurseRegionSpec":
        if not (0 < self.epsilon < params.r):
            raise DomainError("epsilon must lie in (0, r)")
        if self.region not in ("E0", "E1"):
            raise DomainError(f"region must be E0 or E1, got {self.region!r}")
        return self


@dataclass
class FiberSample:
    target: np.ndarray
    points: PointSet
    link_radius: float
    components: int
    labels: np.ndarray = field(repr=False)
    length: float = math.nan
    tol: float = 0.0

    def to_csv_rows(self):
        return [[format_point(self.points.point(i)), int(self.labels[i])] for i in range(len(self.points))]


def image_radius(params: ModelParams) -> float:
    """Radius sn_k(r) of the disk that Psi maps onto (r itself when k = 0)."""
    return float(sf.sn(params.k, params.r))


def _check_purse(P: PointSet):
    if P.kind is not PURSE:
        raise DomainError("expected points on the purse")


def psi_values(P: PointSet, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    """Psi at every point, shape (m, n-1)."""
    _check_purse(P)
    bp = base_points(P.params, PURSE)
    n = P.params.n
    if n < 2:
        raise DomainError("the purse map needs n >= 2")
    return np.stack([f_values(bp[i], P, opts) for i in range(1, n)], axis=-1)


def psi_purse(x: ModelPoint, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    return psi_values(PointSet.from_points([x]), opts)[0]


def f_n_values(P: PointSet, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    """h(d(p_n, x)) - h(d(p_0, x))."""
    _check_purse(P)
    bp = base_points(P.params, PURSE)
    h = ProfileH(P.params.k, P.params.r)
    m = len(P)
    pn = PointSet.from_points([bp[P.params.n]]).repeat(m)
    p0 = PointSet.from_points([bp[0]]).repeat(m)
    return h(pair_distances(pn, P, opts)) - h(pair_distances(p0, P, opts))


def f_n_purse(x: ModelPoint, opts: SolverOpts = DEFAULT_OPTS) -> float:
    return float(f_n_values(PointSet.from_points([x]), opts)[0])


def g_radial(x, epsilon: float | None = None, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    """Psi(x)/|Psi(x)|; ``x`` may be a model point or a precomputed Psi vector."""
    v = psi_purse(x, opts) if isinstance(x, ModelPoint) else np.asarray(x, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm < 1e-9:
        raise DomainError("radial projection undefined where Psi vanishes")
    return v / nrm


def _g_field(opts):
    def g(P):
        v = psi_values(P, opts)
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    return g


def classify_region(x, epsilon: float, r: float | None = None, opts: SolverOpts = DEFAULT_OPTS) -> Region:
    """E0 below R - epsilon, E1 above, both on the common boundary (1e-9).

    R is the image radius for model points, or the given ``r`` for raw norms.
    """
    if isinstance(x, ModelPoint):
        r = image_radius(x.params)
        a = float(np.linalg.norm(psi_purse(x, opts)))
    else:
        if r is None:
            raise DomainError("r is required when classifying a raw Psi norm")
        a = float(x)
    edge = r - epsilon
    if abs(a - edge) <= 1e-9:
        return Region.BOTH
    return Region.E0 if a < edge else Region.E1


def singular_points(params: ModelParams, count: int, seed: int) -> PointSet:
    """Uniform points on the singular sphere (rim with u_n = 0)."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, params.n))
    g[:, -1] = 0.0
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return PointSet.make(PURSE, params, np.full(count, params.r), g)


# ---------------------------------------------------------------------------
# fibers


def _grid(params: ModelParams, spacing: float) -> PointSet:
    """Cubic lattice of the r-ball in normal coordinates."""
    r, n = params.r, params.n
    ax = np.arange(-r, r + 0.5 * spacing, spacing)
    G = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    t = np.linalg.norm(G, axis=1)
    keep = t <= r
    G, t = G[keep], t[keep]
    u = np.where(t[:, None] > 0, G / np.where(t > 0, t, 1.0)[:, None], np.eye(n)[0])
    return PointSet.make(PURSE, params, t, u)


class FiberExtractor:
    """Psi on a fixed grid, reused across targets."""

    def __init__(self, params: ModelParams, grid_resolution: float | None = None,
                 opts: SolverOpts = DEFAULT_OPTS):
        self.params, self.opts = params, opts
        self.spacing = params.r / 50 if grid_resolution is None else float(grid_resolution)
        if not self.spacing > 0:
            raise DomainError("grid resolution must be positive")
        self.grid = _grid(params, self.spacing)
        self.psi = psi_values(self.grid, opts)

    def extract(self, target, tol: float | None = None, link_radius: float | None = None) -> FiberSample:
        w = np.asarray(target, dtype=float)
        r = self.params.r
        if w.shape != (self.params.n - 1,):
            raise DomainError("target has the wrong dimension")
        if not np.linalg.norm(w) < image_radius(self.params):
            raise DomainError("target must lie inside the open image disk")
        tol = self.spacing if tol is None else tol
        link = 3.0 * self.spacing if link_radius is None else link_radius
        sel = np.flatnonzero(np.linalg.norm(self.psi - w, axis=1) <= tol)
        if sel.size == 0:
            raise ResolutionError("empty fiber at this grid resolution and tolerance")
        P = self.grid.take(sel)
        W = _link_graph(P, link, self.opts)
        ncomp, labels = connected_components(W, directed=False)
        return FiberSample(w, P, link, int(ncomp), labels, _graph_diameter(W, labels) * 2.0, tol)


def _link_graph(P: PointSet, link: float, opts):
    """Sparse graph of pairs within ``link`` in the purse metric.

    Candidates come from a KD-tree on coordinates that never overestimate
    the intrinsic distance, queried against the points and their mirror
    images (pairs linked through the glued rim); each candidate is then
    confirmed with the exact distance.
    """
    k = P.params.k
    X = _tree_coords(k, P.chart())
    RX = X.copy()
    RX[:, -1] *= -1.0
    tree = cKDTree(X)
    pairs = tree.query_pairs(link, output_type="ndarray")
    near = np.flatnonzero(P.t > P.params.r - link)
    if near.size:
        cross = cKDTree(RX[near]).query_ball_tree(cKDTree(X[near]), link)
        extra = [(near[a], near[b]) for a, lst in enumerate(cross) for b in lst if near[a] < near[b]]
        if extra:
            pairs = np.unique(np.vstack([pairs.reshape(-1, 2), np.array(extra)]), axis=0)
    m = len(P)
    if pairs.size == 0:
        return coo_matrix((m, m)).tocsr()
    d = pair_distances(P.take(pairs[:, 0]), P.take(pairs[:, 1]), opts)
    ok = (d <= link) & (d > 0)
    i, j, d = pairs[ok, 0], pairs[ok, 1], d[ok]
    return coo_matrix((np.r_[d, d], (np.r_[i, j], np.r_[j, i])), shape=(m, m)).tocsr()


def _graph_diameter(W, labels) -> float:
    """Largest finite shortest-path distance within the biggest component."""
    big = np.argmax(np.bincount(labels))
    idx = np.flatnonzero(labels == big)
    if idx.size < 2:
        return 0.0
    D = shortest_path(W[idx][:, idx], method="D", directed=False)
    return float(D[np.isfinite(D)].max())


def fiber_extract(params: ModelParams, target, tol: float | None = None, grid_resolution: float | None = None,
                  link_radius: float | None = None, opts: SolverOpts = DEFAULT_OPTS) -> FiberSample:
    return FiberExtractor(params, grid_resolution, opts).extract(target, tol, link_radius)


def fiber_targets(params: ModelParams, epsilon: float, per_axis: int = 5) -> np.ndarray:
    """Product grid of targets covering the closed (n-1)-disk of radius r - epsilon."""
    m = params.n - 1
    R = image_radius(params) - epsilon
    ax = np.linspace(-R, R, per_axis)
    T = np.stack(np.meshgrid(*([ax] * m), indexing="ij"), axis=-1).reshape(-1, m)
    # pull corner targets into the disk along their ray
    nrm = np.linalg.norm(T, axis=1, keepdims=True)
    return np.where(nrm > R, T * (R / np.where(nrm > 0, nrm, 1.0)), T)


def fiber_scan(params: ModelParams, epsilon: float, per_axis: int = 5, grid_resolution: float | None = None,
               tol: float | None = None, opts: SolverOpts = DEFAULT_OPTS, length_tol: float = 0.05) -> ScanReport:
    """Component count and length of fibers over a grid of interior targets."""
    t0 = time.perf_counter()
    rep = ScanReport("fiber", config={"params": asdict(params), "epsilon": epsilon, "per_axis": per_axis,
                                      "grid_resolution": grid_resolution, "tol": tol})
    ex = FiberExtractor(params, grid_resolution, opts)
    rows = []
    worst = 0.0
    for w in fiber_targets(params, epsilon, per_axis):
        fs = ex.extract(w, tol)
        ref = 2.0 * math.sqrt(max(params.r ** 2 - float(w @ w), 0.0)) if params.k == 0 else math.nan
        rel = abs(fs.length / ref - 1.0) if params.k == 0 else math.nan
        if params.k == 0:
            worst = max(worst, rel)
        rows.append([*w.tolist(), len(fs.points), fs.components, fs.length, ref, rel])
    comps = [row[params.n + 0] for row in rows]
    rep.results = {"targets": len(rows), "max_components": int(max(comps)), "min_components": int(min(comps)),
                   "grid_spacing": ex.spacing, "grid_points": len(ex.grid)}
    rep.check("single_component", all(c == 1 for c in comps))
    if params.k == 0:
        rep.results["max_length_rel_error"] = worst
        rep.check("chord_circle_length", worst <= length_tol)
    psi_max = float(np.linalg.norm(ex.psi, axis=1).max())
    rep.results["max_abs_psi"] = psi_max
    rep.check("psi_in_disk", psi_max <= image_radius(params) + 1e-6)
    rep.add_table("targets", [*[f"w{i + 1}" for i in range(params.n - 1)], "points", "components", "length",
                              "chord_reference", "rel_error"], rows)
    rep.wall_time = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# submersion


def _frame_coeffs(k: int, frames: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Coefficients of chart tangents W (m, c, n+1) in the frames (m, n, n+1)."""
    if k == -1:
        W = W.copy()
        W[..., 0] *= -1.0
    return np.einsum("mcj,mij->mci", W, frames)


def level_orbit(x: PointSet, count: int, seed: int) -> PointSet:
    """Rotations of x in the first n-1 axes (isometries fixing |Psi| and f_n)."""
    rng = np.random.default_rng(seed)
    n = x.params.n
    u = x.u[0]
    g = rng.standard_normal((count, n - 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    U = np.c_[g * np.linalg.norm(u[:-1]), np.full(count, u[-1])]
    return PointSet.make(PURSE, x.params, np.full(count, x.t[0]), U)


def _horizontal_dirs(spaces, P: PointSet, pairs_list, dirs: int, seed: int, opts):
    """Unit frame vectors sampled in the span of the directions to the a-points."""
    k = P.params.k
    frames = tangent_frame(k, P.chart())
    rng = np.random.default_rng([seed, 613])
    out = []
    for i, pairs in enumerate(pairs_list):
        anchors = [a for a, _ in pairs]
        x = P.take([i])
        W = log_directions(x.repeat(len(anchors)), spaces[i].points.take(anchors), opts)
        C = _frame_coeffs(k, frames[i:i + 1], W[None])[0]  # (c, n)
        Q, _ = np.linalg.qr(C.T)  # orthonormal basis of the span
        if len(anchors) == 1:
            coeff = np.array([[1.0], [-1.0]])[: max(1, min(dirs, 2))]
        else:
            g = rng.standard_normal((dirs, len(anchors)))
            coeff = g / np.linalg.norm(g, axis=1, keepdims=True)
        out.append(coeff @ Q.T)
    return frames, out


def submersion_scan(params: ModelParams, cfg: ScanConfig, region: PurseRegionSpec, points: int = 60,
                    dirs: int = 8, level_tol: float | None = None, opts: SolverOpts = DEFAULT_OPTS) -> ScanReport:
    """lambda_est = min over sampled x and horizontal unit v of max_j |D_v F_j|.

    R is the image radius. E0 (|Psi| < R - eps): F = Psi, strainers with
    n-1 pairs drawn from the level set of f_n through x. Near S
    (|Psi| >= R - eps/2): F = Psi/|Psi|, strainers with n-2 pairs drawn
    from the level orbit of x, which fixes |Psi| and f_n.
    """
    region.validate(params)
    n, r, eps = params.n, params.r, region.epsilon
    R = image_radius(params)
    t0 = time.perf_counter()
    rep = ScanReport("submersion", config={"params": asdict(params), "scan": cfg.echo(), "region": asdict(region),
                                           "points": points, "dirs": dirs}, seed=cfg.seed)
    h = cfg.step(params)
    pool = sample_set(PURSE, params, max(40 * points, 2000), "uniform", cfg.seed)
    a = np.linalg.norm(psi_values(pool, opts), axis=1)
    if region.region == "E0":
        X = pool.take(np.flatnonzero(a < R - eps)[:points])
        npairs = n - 1
        F = lambda P: psi_values(P, opts)  # noqa: E731
        cand = sample_set(PURSE, params, cfg.strain_samples * 4, "uniform", cfg.seed + 5)
        lev = f_n_values(cand, opts)
        lev_x = f_n_values(X, opts)
        lt = 0.02 * r if level_tol is None else level_tol
    else:
        X = pool.take(np.flatnonzero(a >= R - eps / 2)[:points])
        npairs = n - 2
        F = _g_field(opts)
    if len(X) == 0:
        raise SetupError("no sample points in the requested region")
    if npairs < 1:
        raise SetupError("no horizontal directions in this dimension")
    if region.region == "E0":
        S = ModelMetricSpace(cand, opts)
    pairs_list, kept, spaces = [], [], []
    for i in range(len(X)):
        x = X.take([i])
        if region.region == "E1":
            cand = level_orbit(x, max(cfg.strain_samples // 4, 16), cfg.seed + 5 + i)
            S = ModelMetricSpace(cand, opts)
        dx = pair_distances(x.repeat(len(cand)), cand, opts)
        if region.region == "E0":
            dx = np.where(np.abs(lev - lev_x[i]) <= lt, dx, -1.0)
        pairs = find_strainer_external(S, dx, npairs, cfg.strain_delta, cfg.strain_r)
        if pairs is not None:
            pairs_list.append(pairs)
            kept.append(i)
            spaces.append(S)
    if not kept:
        raise SetupError("no strainer found at any sampled point")
    skipped = len(X) - len(kept)
    X = X.take(kept)
    frames, V = _horizontal_dirs(spaces, X, pairs_list, dirs, cfg.seed, opts)
    lam = math.inf
    wit = None
    per_point = []
    for i in range(len(X)):
        x = X.take([i])
        Vc = V[i] @ frames[i]  # chart tangents
        m = len(Vc)
        D = np.abs(directional_derivatives(F, x.repeat(m), Vc, h))  # (m, n-1)
        best = D.max(axis=1)
        j = int(np.argmin(best))
        per_point.append([i, float(best.min()), len(pairs_list[i])])
        if best[j] < lam:
            lam = float(best[j])
            wit = {"point": format_point(X.point(i)), "direction": Vc[j].tolist()}
    rep.results = {"lambda_est": lam, "points_tested": len(X), "points_without_strainer": int(skipped),
                   "horizontal_dim": npairs}
    rep.witnesses.append(wit)
    rep.check("lambda_positive", lam > 0)
    rep.add_table("points", ["point", "lambda_point", "pairs"], per_point)
    rep.wall_time = time.perf_counter() - t0
    return rep


def fiber_f_n_variation(params: ModelParams, targets, grid_resolution: float | None = None,
                        opts: SolverOpts = DEFAULT_OPTS) -> list:
    """max - min of f_n over each extracted fiber (reported, not asserted)."""
    ex = FiberExtractor(params, grid_resolution, opts)
    out = []
    for w in targets:
        fs = ex.extract(w)
        v = f_n_values(fs.points, opts)
        out.append(float(v.max() - v.min()))
    return out


__all__ = [
    "PurseRegionSpec", "FiberSample", "Region", "psi_purse", "psi_values", "f_n_purse", "f_n_values",
    "g_radial", "classify_region", "image_radius", "level_orbit", "singular_points", "FiberExtractor", "fiber_extract", "fiber_targets",
    "fiber_scan", "submersion_scan", "fiber_f_n_variation",
]
