"""Ball volumes by Monte Carlo, Bishop-Gromov ratios, the Swiss-cheese
constant and radius estimates on the model spaces."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import spaceform as sf
from .errors import DomainError
from .modelspace import (
    DEFAULT_OPTS,
    ModelKind,
    ModelParams,
    ModelPoint,
    PointSet,
    SolverOpts,
    distance_matrix,
    distances_to,
    format_point,
    sample_set,
    total_volume,
)
from .report import ScanReport


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    standard_error: float
    samples: int
    seed: int


def _indicator_estimates(d: np.ndarray, rhos, vol: float):
    n = d.size
    out = []
    for rho in rhos:
        hit = d <= rho
        p = hit.mean()
        se = vol * (hit.std(ddof=1) if n > 1 else 0.0) / math.sqrt(n)
        out.append((vol * p, se))
    return out


def _sample_distances(kind, center: ModelPoint, samples: int, seed: int, opts) -> np.ndarray:
    if center.kind is not kind:
        raise DomainError("center is not on the requested model")
    P = sample_set(kind, center.params, samples, "uniform", seed)
    return distances_to(center, P, opts)


def mc_ball_volume(kind, center: ModelPoint, rho: float, samples: int, seed: int,
                   opts: SolverOpts = DEFAULT_OPTS) -> VolumeEstimate:
    """Hit fraction of uniform model samples times the total model volume."""
    kind = ModelKind.parse(kind)
    if not rho > 0:
        raise DomainError("rho must be positive")
    if samples < 2:
        raise DomainError("need at least two samples")
    d = _sample_distances(kind, center, samples, seed, opts)
    v, se = _indicator_estimates(d, [rho], total_volume(kind, center.params))[0]
    return VolumeEstimate(v, se, samples, seed)


def bg_ratio_check(kind, center: ModelPoint, rho_grid, samples: int, seed: int,
                   opts: SolverOpts = DEFAULT_OPTS) -> ScanReport:
    """vol B(center, rho) / V_k(rho) on one shared sample set, checked nonincreasing."""
    kind = ModelKind.parse(kind)
    rhos = np.asarray(rho_grid, dtype=float)
    if rhos.size == 0 or np.any(rhos <= 0) or np.any(np.diff(rhos) <= 0):
        raise DomainError("rho_grid must be positive and strictly increasing")
    t0 = time.perf_counter()
    params = center.params
    rep = ScanReport("bg-ratio", config={"params": asdict(params), "kind": kind.value,
                                         "center": format_point(center), "rho_grid": rhos.tolist(),
                                         "samples": samples}, seed=seed)
    d = _sample_distances(kind, center, samples, seed, opts)
    est = _indicator_estimates(d, rhos, total_volume(kind, params))
    ref = np.array([sf.ball_volume(params.n, params.k, float(r)) for r in rhos])
    val = np.array([e[0] for e in est])
    se = np.array([e[1] for e in est])
    ratio = val / ref
    rse = se / ref
    slack = ratio[1:] - ratio[:-1] - 3.0 * np.hypot(rse[1:], rse[:-1])
    rep.results = {"ratios": ratio.tolist(), "ratio_se": rse.tolist(),
                   "max_increase_over_3se": float(slack.max()) if slack.size else -math.inf}
    rep.check("volumes_monotone", bool(np.all(np.diff(val) >= 0)))
    rep.check("ratio_nonincreasing", bool(np.all(slack <= 0)))
    rep.add_table("volumes", ["rho", "estimate", "SE", "model_reference", "ratio"],
                  [[float(r), float(v), float(s), float(m), float(q)] for r, v, s, m, q in zip(rhos, val, se, ref, ratio)])
    rep.wall_time = time.perf_counter() - t0
    return rep


def swiss_cheese_kappa(n: int, k: int, d: float) -> float:
    """[V(2d) - V(d)] / V(2d); raises if the ratio is not below 1."""
    if not d > 0:
        raise DomainError("d must be positive")
    if k == 1 and not 2 * d < math.pi:
        raise DomainError("need 2d < pi on the sphere")
    if k == 0:
        # flat volumes scale as d^n
        kap = 1.0 - 2.0 ** -n
    else:
        big = sf.ball_volume(n, k, 2.0 * d)
        kap = (big - sf.ball_volume(n, k, d)) / big
    if not kap < 1:
        raise ArithmeticError(f"kappa = {kap} is not below 1")
    return float(kap)


@dataclass(frozen=True)
class RadiusEstimate:
    value: float
    lower: float
    upper: float
    resolution: float
    center: str


def radius_estimate(kind, params: ModelParams, samples: int, seed: int, mode: str = "grid",
                    probes: int | None = None, opts: SolverOpts = DEFAULT_OPTS) -> RadiusEstimate:
    """min over sampled p of max over sampled x of d(p, x), with [lower, upper].

    The bracket uses the covering radius eps of the sample, measured on an
    independent uniform probe set: the true radius lies within eps of the
    estimate (up to how well the probes see the worst gap).
    """
    kind = ModelKind.parse(kind)
    if samples < 2:
        raise DomainError("need at least two samples")
    P = sample_set(kind, params, samples, mode, seed)
    D = distance_matrix(P, opts=opts)
    far = D.max(axis=1)
    i = int(np.argmin(far))
    Q = sample_set(kind, params, probes or 2 * samples, "uniform", seed + 1)
    eps = float(distance_matrix(Q, P, opts=opts).min(axis=1).max())
    est = float(far[i])
    return RadiusEstimate(est, est - eps, est + eps, eps, format_point(P.point(i)))


def radius_scan(kind, params: ModelParams, samples: int, seed: int, expected: float | None = None,
                opts: SolverOpts = DEFAULT_OPTS) -> ScanReport:
    kind = ModelKind.parse(kind)
    t0 = time.perf_counter()
    rep = ScanReport("radius", config={"params": asdict(params), "kind": kind.value, "samples": samples}, seed=seed)
    est = radius_estimate(kind, params, samples, seed, opts=opts)
    rep.results = asdict(est)
    if expected is not None:
        rep.results["expected"] = expected
        rep.check("radius_within_resolution", abs(est.value - expected) <= est.resolution)
    rep.wall_time = time.perf_counter() - t0
    return rep
