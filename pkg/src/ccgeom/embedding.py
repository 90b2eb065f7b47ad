"""Distance-difference embedding of the double disk and its smoothing.

For a reference point z, f_z(x) = h(d(A z, x)) - h(d(z, x)) with the
profile h below; Phi = (f_{p_0}, ..., f_{p_n}) is equivariant under A
(Phi(A x) = -Phi(x)), and on the + sheet f_{p_i}, i >= 1, is the i-th
ambient coordinate. The smoothed f_{i,d} averages f_z over z in the
metric ball B(p_i, d).
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .calculus import directional_derivatives, frame_gradients
from .errors import DomainError, SetupError, UnsupportedKindError
from .modelspace import (
    DEFAULT_OPTS,
    ModelKind,
    ModelParams,
    ModelPoint,
    PointSet,
    SolverOpts,
    apply_A,
    base_points,
    geodesic_step,
    involution_A,
    pair_distances,
    sample_ball,
    sample_set,
    tangent_frame,
)
from .report import ScanReport


@dataclass(frozen=True)
class ProfileH:
    """h(s) = cosh s / (2 sinh r), s^2 / (4 r), cos s / (2 sin r) for k = -1, 0, 1."""

    k: int
    r: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.k == 0:
            return s * s / (4.0 * self.r)
        if self.k == 1:
            return np.cos(s) / (2.0 * math.sin(self.r))
        return np.cosh(s) / (2.0 * math.sinh(self.r))

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        if self.k == 0:
            return s / (2.0 * self.r)
        if self.k == 1:
            return -np.sin(s) / (2.0 * math.sin(self.r))
        return np.sinh(s) / (2.0 * math.sinh(self.r))


def profile_h(p: ProfileH, s):
    if np.any(np.asarray(s) < 0):
        raise DomainError("profile argument must be nonnegative")
    return p(s)


@dataclass(frozen=True)
class ScanConfig:
    d: float = 0.005
    eta: float = 0.01
    mc_samples: int = 4096
    fd_step: float | None = None
    nu: float = 0.1
    rho: float = 0.01
    seed: int = 0
    strain_delta: float = 0.2
    strain_r: float = 0.25
    strain_samples: int = 400

    def step(self, params: ModelParams) -> float:
        return 1e-5 * params.r if self.fd_step is None else self.fd_step

    def validate(self, params: ModelParams) -> "ScanConfig":
        h = self.step(params)
        if not (0 < h <= 1e-3 * params.r):
            raise DomainError("fd_step must lie in (0, 1e-3 r]")
        if not (0 < self.d < params.r / 100):
            raise DomainError("smoothing radius d must lie in (0, r/100)")
        if self.eta <= 0 or self.rho <= 0 or self.nu < 0:
            raise DomainError("eta and rho must be positive, nu nonnegative")
        if self.mc_samples < 0:
            raise DomainError("mc_samples must be >= 0")
        return self

    def echo(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# point evaluation


def _A(kind: ModelKind):
    if kind not in (ModelKind.DOUBLE_DISK, ModelKind.PURSE):
        raise UnsupportedKindError(f"f_z is defined on the double disk and the purse, not {kind.value}")


def f_values(z: ModelPoint, P: PointSet, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    """f_z at every point of P."""
    _A(P.kind)
    h = ProfileH(P.params.k, P.params.r)
    Z = PointSet.from_points([z]).repeat(len(P))
    AZ = PointSet.from_points([involution_A(z)]).repeat(len(P))
    return h(pair_distances(AZ, P, opts)) - h(pair_distances(Z, P, opts))


def f_point(kind, z: ModelPoint, x: ModelPoint, opts: SolverOpts = DEFAULT_OPTS) -> float:
    kind = ModelKind.parse(kind)
    if z.kind is not kind or x.kind is not kind:
        raise DomainError("points are not on the requested model")
    return float(f_values(z, PointSet.from_points([x]), opts)[0])


def phi_values(P: PointSet, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    """Phi = (f_{p_0}, ..., f_{p_n}) at every point of P, shape (m, n+1)."""
    if P.kind is not ModelKind.DOUBLE_DISK:
        raise UnsupportedKindError("Phi is defined on the double disk")
    bp = base_points(P.params, P.kind)
    return np.stack([f_values(bp[i], P, opts) for i in range(P.params.n + 1)], axis=-1)


def phi(x: ModelPoint, opts: SolverOpts = DEFAULT_OPTS) -> np.ndarray:
    return phi_values(PointSet.from_points([x]), opts)[0]


# ---------------------------------------------------------------------------
# ball-smoothed functions


def _mean_h(h, P: PointSet, Q: PointSet, opts, chunk: int = 400_000) -> np.ndarray:
    """mean over q in Q of h(d(p, q)) for every p in P."""
    m, s = len(P), len(Q)
    out = np.empty(m)
    per = max(1, chunk // s)
    for a in range(0, m, per):
        b = min(m, a + per)
        sub = P.take(np.arange(a, b))
        d = pair_distances(sub.repeat(s), Q.tile(b - a), opts)
        out[a:b] = h(d).reshape(b - a, s).mean(axis=1)
    return out


class SmoothedComponent:
    """x -> mean_{q in plus} h(d(q, x)) - mean_{q in minus} h(d(q, x))."""

    def __init__(self, params: ModelParams, plus: PointSet, minus: PointSet, opts: SolverOpts):
        self.h = ProfileH(params.k, params.r)
        self.plus, self.minus, self.opts = plus, minus, opts

    def __call__(self, P: PointSet) -> np.ndarray:
        return _mean_h(self.h, P, self.plus, self.opts) - _mean_h(self.h, P, self.minus, self.opts)


def _ball(center: ModelPoint, cfg: ScanConfig, key, opts) -> PointSet:
    if cfg.mc_samples == 0:
        return PointSet.from_points([center])
    rng = np.random.default_rng([cfg.seed, *key])
    return sample_ball(center, cfg.d, cfg.mc_samples, rng, opts)


class SmoothedEmbedding:
    """The n+1 functions f_{i,d} on the double disk (or n-1 + f_n on the purse).

    Ball samples are drawn once per (seed, i), so each f_{i,d} is a fixed
    deterministic function and can be differenced. ``mc_samples = 0``
    gives the unsmoothed f_{p_i}.
    """

    def __init__(self, params: ModelParams, cfg: ScanConfig, kind=ModelKind.DOUBLE_DISK,
                 opts: SolverOpts = DEFAULT_OPTS):
        self.kind = ModelKind.parse(kind)
        _A(self.kind)
        self.params, self.cfg, self.opts = params, cfg, opts
        self.base = base_points(params, self.kind)
        self.components = []
        for i in range(params.n + 1):
            Q = _ball(self.base[i], cfg, (i,), opts)
            self.components.append(SmoothedComponent(params, apply_A(Q), Q, opts))

    def __len__(self):
        return len(self.components)

    def component(self, i: int):
        return self.components[i]

    def __call__(self, P: PointSet) -> np.ndarray:
        return np.stack([c(P) for c in self.components], axis=-1)

    def standard_errors(self, P: PointSet) -> np.ndarray:
        """Monte Carlo standard error of each f_{i,d}(x) as an estimate of the ball average."""
        out = []
        for c in self.components:
            s = len(c.minus)
            if s < 2:
                out.append(np.zeros(len(P)))
                continue
            vals = []
            for j in range(s):
                qp = c.plus.take([j]).repeat(len(P))
                qm = c.minus.take([j]).repeat(len(P))
                vals.append(c.h(pair_distances(qp, P, self.opts)) - c.h(pair_distances(qm, P, self.opts)))
            out.append(np.std(np.array(vals), axis=0, ddof=1) / math.sqrt(s))
        return np.stack(out, axis=-1)


def f_smoothed(i: int, x: ModelPoint, cfg: ScanConfig, opts: SolverOpts = DEFAULT_OPTS) -> float:
    emb = SmoothedEmbedding(x.params, cfg, x.kind, opts)
    return float(emb.component(i)(PointSet.from_points([x]))[0])


# ---------------------------------------------------------------------------
# derivatives


def directional_derivative(F, x: ModelPoint, v, cfg: ScanConfig) -> float:
    """D_v F at x by finite differences along the geodesic through x.

    ``v`` is a chart tangent vector at x (length n+1) or a vector of frame
    coefficients (length n) in the orthonormal frame at x.
    """
    P = PointSet.from_points([x])
    v = np.asarray(v, dtype=float)
    if v.shape == (x.params.n,):
        v = v @ tangent_frame(x.params.k, P.chart())[0]
    nrm = float(np.linalg.norm(v) if x.params.k != -1 else np.sqrt(max(_mform(v, v), 0.0)))
    if nrm == 0:
        raise DomainError("direction must be nonzero")
    h = cfg.step(x.params)
    val = directional_derivatives(F, P, (v / nrm)[None, :], h)
    return float(np.asarray(val).reshape(-1)[0]) * nrm


def _mform(a, b):
    return -a[0] * b[0] + np.dot(a[1:], b[1:])


def gradients(F, P: PointSet, cfg: ScanConfig):
    """Frame gradients of F at P; see :func:`calculus.frame_gradients`."""
    return frame_gradients(F, P, cfg.step(P.params))


def _unit_dirs(n: int, count: int, seed: int) -> np.ndarray:
    if n == 2:
        a = 2.0 * np.pi * np.arange(count) / count
        return np.c_[np.cos(a), np.sin(a)]
    g = np.random.default_rng([seed, 7919]).standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# scans


def _start(name, cfg, params, kind, **extra):
    rep = ScanReport(name, config={"params": asdict(params), "kind": kind.value, "scan": cfg.echo(), **extra},
                     seed=cfg.seed)
    return rep, time.perf_counter()


def _record(P: PointSet, i: int) -> dict:
    from .modelspace import format_point

    return {"index": int(i), "point": format_point(P.point(i))}


def gradient_bound_scan(params: ModelParams, cfg: ScanConfig, points: int, bound: float = 2.0,
                        tol: float = 1e-3, kind=ModelKind.DOUBLE_DISK, mode: str = "uniform",
                        opts: SolverOpts = DEFAULT_OPTS) -> ScanReport:
    """max over sampled x and i of the finite-difference |grad f_{i,d}(x)|."""
    kind = ModelKind.parse(kind)
    cfg.validate(params)
    rep, t0 = _start("gradient-bound", cfg, params, kind, points=points)
    emb = SmoothedEmbedding(params, cfg, kind, opts)
    P = sample_set(kind, params, points, mode, cfg.seed)
    G, _ = gradients(emb, P, cfg)
    norms = np.linalg.norm(G, axis=-1)
    w = np.unravel_index(np.argmax(norms), norms.shape)
    rep.results = {"max_grad": float(norms.max()), "per_index_max": norms.max(axis=0).tolist(), "bound": bound}
    rep.witnesses.append({**_record(P, int(w[0])), "component": int(w[1])})
    rep.check("grad_bound", norms.max() <= bound + tol)
    rep.add_table("grad", ["point", *[f"grad{i}" for i in range(norms.shape[1])]],
                  [[i, *norms[i].tolist()] for i in range(len(P))])
    rep.wall_time = time.perf_counter() - t0
    return rep


def injectivity_scan(params: ModelParams, cfg: ScanConfig, pairs: int, kind=ModelKind.DOUBLE_DISK,
                     opts: SolverOpts = DEFAULT_OPTS, smoothed: bool = True) -> ScanReport:
    """min |Phi_d(x) - Phi_d(y)| over seeded random pairs with d(x, y) > nu."""
    kind = ModelKind.parse(kind)
    cfg.validate(params)
    rep, t0 = _start("injectivity", cfg, params, kind, pairs=pairs, smoothed=smoothed)
    X = sample_set(kind, params, pairs, "uniform", cfg.seed)
    Y = sample_set(kind, params, pairs, "uniform", cfg.seed + 1)
    d = pair_distances(X, Y, opts)
    keep = np.flatnonzero(d > cfg.nu)
    if smoothed:
        emb = SmoothedEmbedding(params, cfg, kind, opts)
        FX, FY = emb(X.take(keep)), emb(Y.take(keep))
    else:
        FX, FY = phi_values(X.take(keep), opts), phi_values(Y.take(keep), opts)
    sep = np.linalg.norm(FX - FY, axis=1)
    j = int(np.argmin(sep))
    rep.results = {
        "min_separation": float(sep[j]),
        "pairs_tested": int(keep.size),
        "pairs_filtered": int(pairs - keep.size),
        "witness_distance": float(d[keep[j]]),
        "min_ratio": float(np.min(sep / d[keep])),
    }
    rep.witnesses += [_record(X, int(keep[j])), _record(Y, int(keep[j]))]
    rep.check("injective", sep[j] > 0)
    rep.wall_time = time.perf_counter() - t0
    return rep


def _pole_points(params, kind, eps, per_pole, seed, opts):
    """Points within eps of every p_k and A(p_k), k = 1..n, with their index k."""
    bp = base_points(params, kind)
    sets, idx = [], []
    for k in range(1, params.n + 1):
        for c_i, c in enumerate((bp[k], involution_A(bp[k]))):
            rng = np.random.default_rng([seed, 104729, k, c_i])
            S = PointSet.from_points([c])
            if per_pole > 1:
                S = S.concat(sample_ball(c, eps, per_pole - 1, rng, opts))
            sets.append(S)
            idx.append(np.full(len(S), k))
    P = sets[0]
    for S in sets[1:]:
        P = P.concat(S)
    return P, np.concatenate(idx)


def immersion_scan(params: ModelParams, cfg: ScanConfig, points: int, dirs_per_point: int,
                   kind=ModelKind.DOUBLE_DISK, pole_eps: float | None = None, per_pole: int = 16,
                   opts: SolverOpts = DEFAULT_OPTS) -> ScanReport:
    """lambda_est = min over tested (x, unit v) of max_j |D_v f_{j,d}(x)|.

    Tested points are a product grid plus points within ``pole_eps``
    (default r/20) of each p_k and A(p_k); at those the index k is left out,
    so a positive lambda_est there confirms that j(v) can avoid k.
    """
    kind = ModelKind.parse(kind)
    if kind is not ModelKind.DOUBLE_DISK:
        raise UnsupportedKindError("the immersion scan runs on the double disk")
    cfg.validate(params)
    eps = params.r / 20 if pole_eps is None else pole_eps
    rep, t0 = _start("immersion", cfg, params, kind, points=points, dirs=dirs_per_point, pole_eps=eps)
    emb = SmoothedEmbedding(params, cfg, kind, opts)
    grid = sample_set(kind, params, points, "grid", cfg.seed)
    poles, pole_k = _pole_points(params, kind, eps, per_pole, cfg.seed, opts)
    P = grid.concat(poles)
    excl = np.r_[np.full(len(grid), -1), pole_k]
    G, _ = gradients(emb, P, cfg)  # (m, n+1, n)
    V = _unit_dirs(params.n, dirs_per_point, cfg.seed)
    D = np.abs(np.einsum("mjn,ln->mjl", G, V))  # (m, n+1, L)
    full = D.max(axis=1)
    Dx = D.copy()
    rows = np.flatnonzero(excl >= 0)
    Dx[rows, excl[rows], :] = -np.inf
    admissible = Dx.max(axis=1)
    best_j = np.argmax(Dx, axis=1)
    m, l = np.unravel_index(np.argmin(admissible), admissible.shape)
    lam = float(admissible[m, l])
    lam_grid = float(full[: len(grid)].min())
    lam_pole = float(admissible[len(grid):].min())
    rep.results = {
        "lambda_est": lam,
        "lambda_grid": lam_grid,
        "lambda_pole_excluded": lam_pole,
        "lambda_pole_all_indices": float(full[len(grid):].min()),
        "points": int(len(P)),
        "grid_points": int(len(grid)),
        "pole_points": int(len(poles)),
    }
    rep.witnesses.append({**_record(P, int(m)), "direction": V[l].tolist(), "best_index": int(best_j[m, l])})
    rep.check("lambda_positive", lam > 0)
    rep.check("pole_index_exclusion", lam_pole > 0)
    rep.add_table("best_index", ["point", "excluded", *[f"j_dir{i}" for i in range(len(V))]],
                  [[i, int(excl[i]), *best_j[i].tolist()] for i in range(len(P))])
    rep.wall_time = time.perf_counter() - t0
    return rep


def _strainer_space(params, kind, cfg, opts):
    from .strainer import ModelMetricSpace

    S = sample_set(kind, params, cfg.strain_samples, "uniform", cfg.seed + 17)
    return ModelMetricSpace(S, opts)


def equicontinuity_scan(params: ModelParams, cfg: ScanConfig, points: int, lam: float | None = None,
                        ys_per_point: int = 4, dirs: int = 16, rho_grid=None,
                        kind=ModelKind.DOUBLE_DISK, opts: SolverOpts = DEFAULT_OPTS) -> ScanReport:
    """sup |D_v f_{j,d}(x) - D_{P_{x,y} v} f_{j,d}(y)| over y in B(x, rho).

    P_{x,y} = (d phi_y)^{-1} (d phi_x) for the smoothed distance chart phi
    of a strainer found at x. Indices j with x within 100 d of p_j or
    A(p_j) are skipped. With ``lam`` given, the check is sup < lam / 2.
    ``rho_grid`` reports the sup on nested balls (y sampled in the largest).
    """
    from .strainer import OtsuShioyaChart, StrainerSpec, find_strainer_external

    kind = ModelKind.parse(kind)
    cfg.validate(params)
    rhos = sorted([cfg.rho] if rho_grid is None else list(rho_grid))
    rmax = rhos[-1]
    rep, t0 = _start("equicontinuity", cfg, params, kind, points=points, ys_per_point=ys_per_point,
                     rho_grid=rhos, lam=lam)
    h = cfg.step(params)
    n = params.n
    emb = SmoothedEmbedding(params, cfg, kind, opts)
    S = _strainer_space(params, kind, cfg, opts)
    X = sample_set(kind, params, points, "uniform", cfg.seed + 29)
    bp = base_points(params, kind)
    poles = PointSet.from_points(list(bp.p) + [involution_A(p) for p in bp.p])
    rng = np.random.default_rng([cfg.seed, 31])
    rows, skipped, strained = [], 0, 0
    sup = {rho: 0.0 for rho in rhos}
    witness = {rho: None for rho in rhos}
    for i in range(len(X)):
        x = X.take([i])
        dx = pair_distances(x.repeat(len(S.points)), S.points, opts)
        pairs = find_strainer_external(S, dx, n, cfg.strain_delta, cfg.strain_r)
        if pairs is None:
            skipped += 1
            continue
        strained += 1
        spec = StrainerSpec(-1, pairs, cfg.strain_delta, cfg.strain_r)
        chart = OtsuShioyaChart(S, spec, cfg.eta, max(cfg.mc_samples, 1), cfg.seed + i)
        Y = sample_ball(X.point(i), rmax, ys_per_point, rng, opts)
        dy = pair_distances(x.repeat(len(Y)), Y, opts)
        Z = x.concat(Y)
        J, _ = frame_gradients(chart, Z, h)  # (1+ys, n, n), rows = chart components
        G, _ = frame_gradients(emb, Z, h)  # (1+ys, n+1, n)
        dp = pair_distances(x.repeat(len(poles)), poles, opts)
        near = np.zeros(n + 1, dtype=bool)
        for j in range(n + 1):
            near[j] = min(dp[j], dp[j + n + 1]) < 100.0 * cfg.d
        Jx, gx = J[0], G[0]
        for a in range(len(Y)):
            Jy, gy = J[a + 1], G[a + 1]
            try:
                T = np.linalg.solve(Jy, Jx)  # P_{x,y} in frame coordinates
            except np.linalg.LinAlgError:
                skipped += 1
                continue
            w = gx - gy @ T  # rows: covectors v -> D_v f_j(x) - D_{Pv} f_j(y)
            dfx = np.linalg.norm(w, axis=1)
            dfx[near] = 0.0
            val = float(dfx.max())
            j = int(np.argmax(dfx))
            rows.append([i, a, float(dy[a]), val, j])
            for rho in rhos:
                if dy[a] <= rho and val > sup[rho]:
                    sup[rho] = val
                    witness[rho] = (i, a, j)
    if strained == 0:
        raise SetupError("no strainer found at any sampled point")
    rep.results = {
        "defect_sup": sup[cfg.rho] if cfg.rho in sup else sup[rmax],
        "defect_by_rho": {f"{rho:.17g}": sup[rho] for rho in rhos},
        "pairs_tested": len(rows),
        "skipped": skipped,
        "lambda": lam,
    }
    wit = witness[cfg.rho] if cfg.rho in witness else witness[rmax]
    if wit is not None:
        rep.witnesses.append({**_record(X, wit[0]), "y": wit[1], "component": wit[2]})
    if lam is not None:
        rep.check("defect_below_half_lambda", rep.results["defect_sup"] < lam / 2)
    rep.check("pairs_tested", len(rows) > 0)
    rep.add_table("defects", ["x", "y", "dist", "defect", "component"], rows)
    rep.wall_time = time.perf_counter() - t0
    return rep
