"""Gromov-Hausdorff tools on finite metric spaces and an eps-net graph metric."""
from __future__ import annotations

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, shortest_path
from scipy.spatial import cKDTree

from .errors import DomainError, ResolutionError
from .modelspace import (
    ModelKind,
    ModelParams,
    PointSet,
    _chart_dist,
    _glue_linear,
    chart_to_polar,
    polar_to_chart,
)
from .strainer import FiniteMetricSpace

GH_MAX_POINTS = 12
_EQ_TOL = 1e-12


def hausdorff(S: FiniteMetricSpace, A, B) -> float:
    A, B = np.asarray(A), np.asarray(B)
    if A.size == 0 or B.size == 0:
        raise DomainError("Hausdorff distance needs nonempty subsets")
    D = S.dist[np.ix_(A, B)]
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def directed_hausdorff(S: FiniteMetricSpace, A, B) -> float:
    """sup over a in A of the distance from a to B."""
    D = S.dist[np.ix_(np.asarray(A), np.asarray(B))]
    return float(D.min(axis=1).max())


def _feasible(DX, DY, c):
    """Is there a correspondence with distortion <= c?

    Every element is covered in turn by a pair compatible with all pairs
    chosen so far; any correspondence of distortion <= c is found this way.
    """
    m, l = DX.shape[0], DY.shape[0]
    c = c + _EQ_TOL
    # ok[x, y, x', y'] = |dX(x,x') - dY(y,y')| <= c
    ok = np.abs(DX[:, None, :, None] - DY[None, :, None, :]) <= c
    pairs = []
    cover_x = np.zeros(m, dtype=int)
    cover_y = np.zeros(l, dtype=int)

    def compatible(x, y):
        return all(ok[x, y, a, b] for a, b in pairs)

    def add(x, y):
        pairs.append((x, y))
        cover_x[x] += 1
        cover_y[y] += 1

    def pop():
        x, y = pairs.pop()
        cover_x[x] -= 1
        cover_y[y] -= 1

    def search():
        free_x = np.flatnonzero(cover_x == 0)
        if free_x.size:
            x = free_x[0]
            for y in range(l):
                if compatible(x, y):
                    add(x, y)
                    if search():
                        return True
                    pop()
            return False
        free_y = np.flatnonzero(cover_y == 0)
        if free_y.size:
            y = free_y[0]
            for x in range(m):
                if compatible(x, y):
                    add(x, y)
                    if search():
                        return True
                    pop()
            return False
        return True

    return search()


def gh_exact_small(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """Exact GH distance, half the least distortion over correspondences."""
    if len(X) + len(Y) > GH_MAX_POINTS:
        raise DomainError(f"exact GH is limited to {GH_MAX_POINTS} points in total")
    DX, DY = X.dist, Y.dist
    cand = np.unique(np.r_[0.0, np.abs(DX[:, :, None, None] - DY[None, None, :, :]).ravel()])
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(DX, DY, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return 0.5 * float(cand[lo])


def _set_hausdorff_1d(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.sort(a), np.sort(b)

    def directed(p, q):
        j = np.clip(np.searchsorted(q, p), 1, q.size - 1) if q.size > 1 else np.zeros(p.size, int)
        near = np.minimum(np.abs(p - q[j - 1 if q.size > 1 else 0]), np.abs(p - q[j]))
        return near.max()

    return float(max(directed(a, b), directed(b, a)))


def gh_lower(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """max of the diameter bound and the local distance-set bound.

    For a pair (x, y) in a correspondence R, the sets {d(x, .)} and
    {d(y, .)} are within dis(R) in Hausdorff distance on the line.
    """
    diam = 0.5 * abs(X.diameter - Y.diameter)
    H = np.array([[_set_hausdorff_1d(X.dist[i], Y.dist[j]) for j in range(len(Y))] for i in range(len(X))])
    local = 0.5 * max(H.min(axis=1).max(), H.min(axis=0).max())
    return float(max(diam, local))


def perturb_metric(S: FiniteMetricSpace, amplitude: float, seed: int) -> FiniteMetricSpace:
    """Multiply entries by symmetric factors in [1-a, 1+a], then repair.

    Repair is the shortest-path closure, which only lowers entries. The
    returned space records gh_lower against the input in ``meta``.
    """
    if not 0.0 <= amplitude <= 0.2:
        raise DomainError("amplitude must lie in [0, 0.2]")
    if amplitude == 0.0:
        T = FiniteMetricSpace(S.dist.copy(), S.curv_lb, list(S.labels))
    else:
        rng = np.random.default_rng(seed)
        n = len(S)
        F = rng.uniform(1.0 - amplitude, 1.0 + amplitude, size=(n, n))
        F = np.triu(F, 1)
        F = F + F.T
        raw = S.dist * F
        closed = shortest_path(raw, method="FW", directed=False)
        T = FiniteMetricSpace(closed, S.curv_lb, list(S.labels))
        T.meta["raw"] = raw
    T.meta["amplitude"] = amplitude
    T.meta["seed"] = seed
    T.meta["gh_lower"] = gh_lower(S, T)
    T.meta["gh_bound"] = amplitude * S.diameter
    return T


# ---------------------------------------------------------------------------
# eps-net graph metric on the model spaces


def _lattice(n: int, eps: float, radius: float) -> np.ndarray:
    """Hexagonal (n=2) or cubic lattice points of spacing eps in a ball."""
    m = int(math.ceil(radius / eps)) + 1
    if n == 2:
        j, i = np.mgrid[-2 * m:2 * m + 1, -m:m + 1]
        x = eps * (i + 0.5 * (j % 2))
        y = eps * (math.sqrt(3.0) / 2.0) * j
        pts = np.c_[x.ravel(), y.ravel()]
    else:
        axes = [np.arange(-m, m + 1) * eps] * n
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    return pts[np.linalg.norm(pts, axis=1) <= radius]


def _tree_coords(k: int, X: np.ndarray) -> np.ndarray:
    """Coordinates whose Euclidean distance never exceeds the intrinsic one.

    Ambient chords do this for k = 0, 1; for k = -1 the normal coordinates
    at the center do (the exponential map of hyperbolic space expands).
    """
    if k != -1:
        return X
    t, u = chart_to_polar(k, X)
    return t[:, None] * u


def _csr_min(rows, cols, w, size):
    """Sparse graph keeping the lightest of any repeated (row, col) edge.

    coo -> csr conversion sums duplicates, which would inflate edges that
    are found through more than one pair of lifts.
    """
    order = np.lexsort((w, cols, rows))
    rows, cols, w = rows[order], cols[order], w[order]
    first = np.ones(rows.size, dtype=bool)
    first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    # tiny offset keeps zero-length edges from vanishing from the sparse graph
    return coo_matrix((w[first] + 1e-300, (rows[first], cols[first])), shape=(size, size)).tocsr()


class GraphOracle:
    """Shortest paths on an eps-net of a model space.

    Net points sit on a lattice in normal coordinates around the center,
    plus rim points obtained by radially projecting the lattice points
    within eps of the rim (together with their images under the gluing).
    Each node keeps every chart lift it has (a rim node of the double disk
    lies on both sheets, a glued rim node has two positions). Nodes are
    linked when two of their lifts on one sheet are within 3 eps, with the
    exact single-disk distance as weight, so every graph path is an
    admissible path and graph distances never undercut the true metric.

    With a ``parent`` oracle the parent's nodes and edges (at the parent's
    reach) are kept and the new net is added on top, so the refined graph
    contains the coarse one and its distances can only go down.
    """

    def __init__(self, kind, params: ModelParams, net_epsilon: float, parent: "GraphOracle | None" = None):
        self.kind = ModelKind.parse(kind)
        self.params = params
        if not net_epsilon > 0:
            raise DomainError("net_epsilon must be positive")
        if parent is not None and (parent.kind is not self.kind or parent.params != params):
            raise DomainError("parent oracle belongs to a different model")
        self.eps = float(net_epsilon)
        n, r, k = params.n, params.r, params.k
        sheets = [1, -1] if self.kind is ModelKind.DOUBLE_DISK else [1]
        W = _lattice(n, self.eps, r + self.eps)
        rad = np.linalg.norm(W, axis=1)
        inner = W[rad < r]
        rim_u = W[(rad >= r - self.eps) & (rad > 0)]
        rim_u = rim_u / np.linalg.norm(rim_u, axis=1, keepdims=True)
        if self.kind in (ModelKind.CROSSCAP, ModelKind.PURSE):
            rim_u = np.vstack([rim_u, _glue_linear(self.kind, np.c_[np.zeros(len(rim_u)), rim_u])[:, 1:]])
        rim = PointSet.make(self.kind, params, np.full(len(rim_u), r), rim_u)
        key = np.round(rim.u, 12)
        _, first = np.unique(key, axis=0, return_index=True)
        rim = rim.take(np.sort(first))
        t_in = np.linalg.norm(inner, axis=1)
        u_in = np.where(t_in[:, None] > 0, inner / np.where(t_in > 0, t_in, 1.0)[:, None], 0.0)
        u_in[t_in == 0, 0] = 1.0
        base = [rim]
        for s in sheets:
            base.append(PointSet(self.kind, params, t_in, u_in, np.full(len(t_in), s)))
        net = base[0]
        for b in base[1:]:
            net = net.concat(b)
        if parent is not None:
            net = parent.net.concat(net)
        # (node prefix, reach): nodes below the prefix are linked within reach
        self.layers = (parent.layers if parent is not None else []) + [(len(net), 3.0 * self.eps)]
        self.net = net
        self._build()

    def refine(self) -> "GraphOracle":
        """Oracle at eps/2 that contains this graph as a subgraph."""
        return GraphOracle(self.kind, self.params, 0.5 * self.eps, parent=self)

    def _lifts(self, P: PointSet):
        """(node offset, sheet, chart position) for every lift of P's points."""
        k, r = self.params.k, self.params.r
        X = P.chart()
        idx = np.arange(len(P))
        rim = P.t >= r
        out_i, out_s, out_x = [idx], [P.sheet.astype(int)], [X]
        if np.any(rim):
            ri = idx[rim]
            if self.kind is ModelKind.DOUBLE_DISK:
                out_i.append(ri)
                out_s.append(-P.sheet[rim].astype(int))
                out_x.append(X[rim])
            elif self.kind in (ModelKind.CROSSCAP, ModelKind.PURSE):
                out_i.append(ri)
                out_s.append(np.ones(ri.size, int))
                out_x.append(_glue_linear(self.kind, X[rim]))
        return np.concatenate(out_i), np.concatenate(out_s), np.vstack(out_x)

    def _edges(self, ia, sa, xa, ib, sb, xb, same, reach):
        k = self.params.k
        rows, cols, w = [], [], []
        for s in np.unique(sa):
            ma, mb = sa == s, sb == s
            if not np.any(ma) or not np.any(mb):
                continue
            ta = cKDTree(_tree_coords(k, xa[ma]))
            if same:
                pr = ta.query_pairs(reach, output_type="ndarray")
                a, b = pr[:, 0], pr[:, 1]
                XA, XB = xa[ma], xa[ma]
                IA, IB = ia[ma], ia[ma]
            else:
                tb = cKDTree(_tree_coords(k, xb[mb]))
                lst = ta.query_ball_tree(tb, reach)
                a = np.repeat(np.arange(len(lst)), [len(q) for q in lst])
                b = np.fromiter((j for q in lst for j in q), dtype=int, count=a.size)
                XA, XB = xa[ma], xb[mb]
                IA, IB = ia[ma], ib[mb]
            if a.size == 0:
                continue
            d = _chart_dist(k, XA[a], XB[b])
            keep = d <= reach
            rows.append(IA[a[keep]])
            cols.append(IB[b[keep]])
            w.append(d[keep])
        if not rows:
            return np.empty(0, int), np.empty(0, int), np.empty(0)
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(w)

    def _build(self):
        # tree distances never exceed intrinsic ones, so a tree ball of
        # radius 3 eps contains every partner within intrinsic distance 3 eps
        ia, sa, xa = self._lifts(self.net)
        self._lift = (ia, sa, xa)
        parts = []
        for prefix, reach in self.layers:
            m = ia < prefix
            parts.append(self._edges(ia[m], sa[m], xa[m], ia[m], sa[m], xa[m], True, reach))
        rows, cols, w = (np.concatenate(c) for c in zip(*parts))
        keep = rows != cols
        self._edges_net = (rows[keep], cols[keep], w[keep])
        N = len(self.net)
        G = _csr_min(rows[keep], cols[keep], w[keep], N)
        ncomp, _ = connected_components(G, directed=False)
        if ncomp != 1:
            raise ResolutionError(f"eps-net graph has {ncomp} components; decrease net_epsilon")

    @property
    def size(self) -> int:
        return len(self.net)

    def distances(self, P: PointSet, Q: PointSet) -> np.ndarray:
        """Graph distances between P[i] and Q[i] (query points join the net)."""
        if P.kind is not self.kind or P.params != self.params:
            raise DomainError("query points belong to a different model")
        if len(P) != len(Q):
            raise DomainError("point sets must have equal length")
        N = len(self.net)
        queries = P.concat(Q)
        qi, qs, qx = self._lifts(queries)
        ia, sa, xa = self._lift
        parts = []
        for prefix, reach in self.layers:
            m = ia < prefix
            parts.append(self._edges(qi + N, qs, qx, ia[m], sa[m], xa[m], False, reach))
        r1, c1, w1 = (np.concatenate(c) for c in zip(*parts))
        r0, c0, w0 = self._edges_net
        M = N + len(queries)
        rows = np.concatenate([r0, r1, c1])
        cols = np.concatenate([c0, c1, r1])
        w = np.concatenate([w0, w1, w1])
        # direct query-query edges (same sheet, short) keep tiny pairs exact
        reach = max(rc for _, rc in self.layers)
        rq, cq, wq = self._edges(qi + N, qs, qx, qi + N, qs, qx, True, reach)
        rows = np.concatenate([rows, rq, cq])
        cols = np.concatenate([cols, cq, rq])
        w = np.concatenate([w, wq, wq])
        G = _csr_min(rows, cols, w, M)
        src = N + np.arange(len(P))
        uniq, inv = np.unique(src, return_inverse=True)
        D = dijkstra(G, directed=False, indices=uniq)
        out = D[inv, N + len(P) + np.arange(len(Q))]
        if not np.all(np.isfinite(out)):
            raise ResolutionError("query point not linked to the net; decrease net_epsilon")
        same = np.flatnonzero(_same_point(P, Q))
        out[same] = 0.0
        return out


def _same_point(P: PointSet, Q: PointSet) -> np.ndarray:
    return (P.t == Q.t) & np.all(P.u == Q.u, axis=1) & (P.sheet == Q.sheet)


def graph_oracle(kind, params: ModelParams, net_epsilon: float, P: PointSet, Q: PointSet) -> np.ndarray:
    """Shortest-path distances on an eps-net; an upper bound on the metric."""
    return GraphOracle(kind, params, net_epsilon).distances(P, Q)
