"""Batch experiment runner.

Config files are key = value lines under section headers; every key has a
default and unknown sections or keys are rejected::

    [run]
    experiment = embed-scan
    seed = 0

    [model]
    n = 2
    k = 1
    r = 1.0

Exit codes: 0 when every check passes, 1 when a check fails (named in the
report), 2 on configuration or parameter errors.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import asdict, fields, replace

import numpy as np

from .embedding import (
    ScanConfig,
    equicontinuity_scan,
    gradient_bound_scan,
    immersion_scan,
    injectivity_scan,
    phi_values,
)
from .errors import GeometryError
from .modelspace import ModelKind, ModelParams, apply_A, base_points, involution_A, model_distance, sample_set
from .report import ScanReport, write_report

EXPERIMENTS = {
    "embed-scan": "coordinate identity, equivariance, gradient bound, injectivity and immersion of Phi",
    "strain": "strainer search, BGP chart distortion and the round-sphere map",
    "fiber": "purse fibers over interior targets and submersion constants",
    "volcomp": "Monte Carlo ball volumes, Bishop-Gromov ratios, Swiss-cheese constants, radius",
    "gh": "exact and lower Gromov-Hausdorff bounds, metric perturbation",
    "dist-oracle": "single-crossing distances against the epsilon-net graph oracle",
}


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _floats(s: str):
    return [float(v) for v in s.replace(",", " ").split()]


SCHEMA = {
    "run": {"experiment": (str, "embed-scan"), "seed": (int, 0), "out": (str, "out")},
    "model": {"n": (int, 2), "k": (int, 1), "r": (float, 1.0), "kind": (str, "DoubleDisk")},
    "scan": {
        "d": (float, 0.005), "eta": (float, 0.01), "mc_samples": (int, 64), "fd_step": (_opt_float, None),
        "nu": (float, 0.1), "rho": (_opt_float, None), "strain_delta": (float, 0.2),
        "strain_r": (float, 0.25), "strain_samples": (int, 400),
    },
    "embed-scan": {
        "identity_samples": (int, 1000), "grad_points": (int, 1000), "pairs": (int, 10000),
        "immersion_points": (int, 1000), "dirs": (int, 16), "per_pole": (int, 16),
        "equicontinuity": (_bool, False), "eq_points": (int, 200), "eq_ys": (int, 4),
    },
    "strain": {"samples": (int, 1500), "delta": (float, 0.05), "strain_r": (float, 0.3),
               "chart_radius": (float, 0.05), "chart_points": (int, 200), "specs": (int, 1000), "sphere_dim": (int, 3),
               "sphere_samples": (int, 500)},
    "fiber": {"epsilon": (float, 0.25), "per_axis": (int, 5), "grid_resolution": (_opt_float, None),
              "submersion_points": (int, 40), "submersion_dirs": (int, 8),
              "strain_delta": (float, 0.3), "strain_r": (float, 0.1)},
    "volcomp": {"center": (str, "p0"), "rho_grid": (_floats, [0.25, 0.5, 1.0, 1.5, 2.0]),
                "samples": (int, 100000), "kappa_points": (int, 20), "radius_samples": (int, 1000)},
    "gh": {"pairs": (int, 100), "max_points": (int, 6), "amplitudes": (_floats, [0.0, 0.01, 0.02]),
           "samples": (int, 600)},
    "dist-oracle": {"pairs": (int, 100), "net_epsilon": (_opt_float, None), "tolerance": (float, 0.02)},
}


def parse_config(text: str | None) -> dict:
    """Strictly parse config text into typed sections filled with defaults."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text or "")
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    if cp.defaults():
        raise ConfigError("keys outside a section are not allowed")
    cfg = {sec: {k: v[1] for k, v in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            typ = SCHEMA[sec][key][0]
            try:
                cfg[sec][key] = typ(raw)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {sec}.{key}: {raw!r}") from e
    return cfg


def _params(cfg) -> tuple:
    m = cfg["model"]
    return ModelParams(m["n"], m["k"], m["r"]), ModelKind.parse(m["kind"])


def _scan(cfg, params) -> ScanConfig:
    s = dict(cfg["scan"])
    if s["rho"] is None:
        s["rho"] = params.r / 100
    s["seed"] = cfg["run"]["seed"]
    names = {f.name for f in fields(ScanConfig)}
    return ScanConfig(**{k: v for k, v in s.items() if k in names}).validate(params)


def _merge(rep: ScanReport, name: str, sub: ScanReport) -> None:
    rep.results[name] = sub.results
    for k, v in sub.checks.items():
        rep.check(f"{name}.{k}", v)
    rep.witnesses += [{"scan": name, **w} for w in sub.witnesses if w]
    for t, tab in sub.tables.items():
        rep.tables[f"{name}_{t}"] = tab


# ---------------------------------------------------------------------------
# experiments


def exp_embed(cfg, rep):
    params, _ = _params(cfg)
    sc = _scan(cfg, params)
    o = cfg["embed-scan"]
    seed = sc.seed
    P = sample_set(ModelKind.DOUBLE_DISK, params, o["identity_samples"], "uniform", seed)
    plus = P.take(np.flatnonzero(P.sheet > 0))
    F = phi_values(plus)
    ident = float(np.abs(F[:, 1:] - plus.ambient()[:, 1:]).max())
    eqv = float(np.abs(phi_values(apply_A(P)) + phi_values(P)).max())
    rep.results["coordinate_identity_max_error"] = ident
    rep.results["equivariance_max_error"] = eqv
    rep.check("coordinate_identity", ident <= 1e-9)
    rep.check("equivariance", eqv <= 1e-9)
    _merge(rep, "gradient", gradient_bound_scan(params, sc, o["grad_points"]))
    _merge(rep, "injectivity", injectivity_scan(params, sc, o["pairs"]))
    imm = immersion_scan(params, sc, o["immersion_points"], o["dirs"], per_pole=o["per_pole"])
    _merge(rep, "immersion", imm)
    if o["equicontinuity"]:
        lam = imm.results["lambda_est"]
        r = params.r
        eq = equicontinuity_scan(params, sc, o["eq_points"], lam=lam, ys_per_point=o["eq_ys"],
                                 rho_grid=sorted({sc.rho, r / 100, r / 50, r / 20}))
        _merge(rep, "equicontinuity", eq)


def exp_strain(cfg, rep):
    from . import strainer as st

    params, kind = _params(cfg)
    o = cfg["strain"]
    seed = cfg["run"]["seed"]
    S, spec, dist = st.strained_ball_distortion(kind, params, o["samples"], o["delta"], o["strain_r"],
                                                o["chart_radius"], o["chart_points"], seed)
    rep.results["strainer_found"] = spec is not None
    rep.check("strainer_found", spec is not None)
    if spec is not None:
        rpt = st.is_strained(S, spec)
        rep.results.update({"strainer_pairs": [list(p) for p in spec.pairs], "margin": rpt.margin,
                            "bgp_distortion": dist})
        rep.check("is_strained", rpt.ok)
    # delta monotonicity on random specs
    rng = np.random.default_rng([seed, 3])
    viol = 0
    m = len(S)
    for _ in range(o["specs"]):
        idx = rng.choice(m, size=2 * params.n + 1, replace=False)
        pairs = [(int(idx[1 + 2 * a]), int(idx[2 + 2 * a])) for a in range(params.n)]
        d1, d2 = np.sort(rng.uniform(0.0, 1.5, 2))
        a = st.is_strained(S, st.StrainerSpec(int(idx[0]), pairs, d1, o["strain_r"]))
        b = st.is_strained(S, st.StrainerSpec(int(idx[0]), pairs, d2, o["strain_r"]))
        viol += int((a.ok and not b.ok) or b.margin < a.margin - 1e-12)
    rep.results["delta_monotonicity_violations"] = viol
    rep.check("delta_monotone", viol == 0)
    # global strainer on the round sphere of dimension sphere_dim - 1
    dim = o["sphere_dim"]
    G = np.random.default_rng([seed, 5]).standard_normal((o["sphere_samples"], dim))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    E = np.vstack([np.eye(dim), -np.eye(dim), G])
    D = np.arccos(np.clip(E @ E.T, -1.0, 1.0))
    np.fill_diagonal(D, 0.0)
    Ssph = st.FiniteMetricSpace(D, 1)
    gspec = st.GlobalStrainerSpec([[i] for i in range(dim)], [[dim + i] for i in range(dim)], 0.1)
    sm = st.SphereMap(Ssph, gspec)
    rows = np.arange(2 * dim, len(E))
    i, j = np.triu_indices(rows.size, 1)
    sd = sm.distortion(np.c_[rows[i], rows[j]])
    rep.results["sphere_map_distortion"] = sd
    rep.results["global_strainer_margin"] = gspec.margin(Ssph)
    rep.check("sphere_map_distortion", sd <= 1e-9)


def exp_fiber(cfg, rep):
    from .pursemap import PurseRegionSpec, fiber_scan, submersion_scan

    params, _ = _params(cfg)
    o = cfg["fiber"]
    _merge(rep, "fibers", fiber_scan(params, o["epsilon"], o["per_axis"], o["grid_resolution"]))
    sc = replace(_scan(cfg, params), strain_delta=o["strain_delta"], strain_r=o["strain_r"])
    for reg in ("E0", "E1"):
        sub = submersion_scan(params, sc, PurseRegionSpec(o["epsilon"], reg), o["submersion_points"],
                              o["submersion_dirs"])
        _merge(rep, f"submersion_{reg}", sub)


def exp_volcomp(cfg, rep):
    from .modelspace import parse_point
    from .volcomp import bg_ratio_check, radius_estimate, swiss_cheese_kappa

    params, kind = _params(cfg)
    o = cfg["volcomp"]
    seed = cfg["run"]["seed"]
    c = base_points(params, kind)[0] if o["center"] == "p0" else parse_point(o["center"])
    _merge(rep, "bg", bg_ratio_check(kind, c, o["rho_grid"], o["samples"], seed))
    ds = np.geomspace(1e-3, params.r / 2, o["kappa_points"])
    kap = [swiss_cheese_kappa(params.n, params.k, float(d)) for d in ds]
    rep.results["kappa_max"] = max(kap)
    rep.check("kappa_below_one", max(kap) < 1)
    est = radius_estimate(kind, params, o["radius_samples"], seed)
    rep.results["radius"] = asdict(est)
    if kind in (ModelKind.CROSSCAP, ModelKind.DISK):
        rep.check("radius_within_resolution", abs(est.value - params.r) <= est.resolution)
    rep.add_table("kappa", ["d", "kappa"], [[float(d), k] for d, k in zip(ds, kap)])


def exp_gh(cfg, rep):
    from . import ghlab
    from .strainer import FiniteMetricSpace, ModelMetricSpace, find_strainer, is_strained, StrainerSpec

    o = cfg["gh"]
    seed = cfg["run"]["seed"]
    rng = np.random.default_rng([seed, 11])
    worst = -math.inf
    for _ in range(o["pairs"]):
        sizes = rng.integers(1, o["max_points"] + 1, size=2)
        spaces = []
        for s in sizes:
            pts = rng.random((s, 2))
            spaces.append(FiniteMetricSpace(np.linalg.norm(pts[:, None] - pts[None], axis=-1)))
        lo = ghlab.gh_lower(*spaces)
        ex = ghlab.gh_exact_small(*spaces)
        worst = max(worst, lo - ex)
    rep.results["max_lower_minus_exact"] = worst
    rep.check("lower_below_exact", worst <= 1e-12)
    params, kind = _params(cfg)
    S = ModelMetricSpace(sample_set(kind, params, o["samples"], "uniform", seed))
    x = int(np.argmin(np.abs(S.points.t - 0.5 * params.r) + (S.points.sheet < 0)))
    sc = cfg["scan"]
    spec = find_strainer(S, x, params.n, sc["strain_delta"], sc["strain_r"])
    rows = []
    rep.check("strainer_found", spec is not None)
    if spec is not None:
        base = is_strained(S, spec).margin
        for a in o["amplitudes"]:
            Sp = ghlab.perturb_metric(S, a, seed)
            m = is_strained(Sp, StrainerSpec(x, spec.pairs, spec.delta, spec.r)).margin
            factor = abs(m - base) / a if a > 0 else 0.0
            rows.append([a, m, abs(m - base), factor, Sp.meta["gh_lower"]])
        rep.results["margin_change_factors"] = [r[3] for r in rows]
        zero = [r for r in rows if r[0] == 0]
        if zero:
            rep.check("identity_at_zero", zero[0][2] == 0.0)
    rep.add_table("perturbation", ["amplitude", "margin", "abs_change", "factor", "gh_lower"], rows)


def exp_dist(cfg, rep):
    from .ghlab import GraphOracle
    from .modelspace import pair_distances

    params, kind = _params(cfg)
    o = cfg["dist-oracle"]
    seed = cfg["run"]["seed"]
    eps = o["net_epsilon"] or params.r / 200
    P = sample_set(kind, params, o["pairs"], "uniform", seed)
    Q = sample_set(kind, params, o["pairs"], "uniform", seed + 1)
    if kind is ModelKind.DOUBLE_DISK:
        Q = type(Q).make(kind, params, Q.t, Q.u, -P.sheet)
    solver = pair_distances(P, Q)
    graph = GraphOracle(kind, params, eps).distances(P, Q)
    rel = (graph - solver) / np.maximum(solver, 1e-300)
    rep.results.update({"max_rel_error": float(np.abs(rel).max()), "min_graph_minus_solver": float((graph - solver).min()),
                        "net_epsilon": eps})
    rep.check("relative_agreement", np.abs(rel).max() <= o["tolerance"])
    rep.check("graph_not_below_solver", (graph - solver).min() >= -1e-9)
    if kind is not ModelKind.DISK:
        bp = base_points(params, kind)
        c = model_distance(bp[0], involution_A(bp[0]))
        expect = 2 * params.r if kind is ModelKind.DOUBLE_DISK else 0.0
        rep.results["center_to_image"] = c
        rep.check("center_closed_form", abs(c - expect) <= 1e-6)
    if kind is ModelKind.DOUBLE_DISK:
        # a point and its copy on the other sheet: straight down to the rim and back
        ts = np.linspace(0.0, params.r, 11)
        U = sample_set(kind, params, ts.size, "uniform", seed + 2).u
        up = type(P).make(kind, params, ts, U, np.ones(ts.size))
        down = type(P).make(kind, params, ts, U, -np.ones(ts.size))
        err = float(np.abs(pair_distances(up, down) - 2.0 * (params.r - ts)).max())
        rep.results["sheet_pair_max_error"] = err
        rep.check("sheet_pair_closed_form", err <= 1e-6)
    rep.add_table("pairs", ["solver", "graph", "rel_error"],
                  [[float(a), float(b), float(c)] for a, b, c in zip(solver, graph, rel)])


RUNNERS = {
    "embed-scan": exp_embed, "strain": exp_strain, "fiber": exp_fiber,
    "volcomp": exp_volcomp, "gh": exp_gh, "dist-oracle": exp_dist,
}


def list_experiments() -> str:
    return "\n".join(f"{k}\t{v}" for k, v in EXPERIMENTS.items())


def run_config(cfg: dict, out_dir: str | None = None, quiet: bool = True) -> tuple:
    """Run a parsed config; returns (exit code, report, written paths)."""
    name = cfg["run"]["experiment"]
    if name not in RUNNERS:
        raise ConfigError(f"unknown experiment {name!r}")
    t0 = time.perf_counter()
    rep = ScanReport(name, config=cfg, seed=cfg["run"]["seed"])
    RUNNERS[name](cfg, rep)
    rep.wall_time = time.perf_counter() - t0
    paths = write_report(rep, out_dir or cfg["run"]["out"], name)
    if not quiet:
        for k, v in rep.checks.items():
            print(f"{'PASS' if v else 'FAIL'} {k}")
    return (0 if rep.passed else 1), rep, paths


def run(config_path: str | None, seed: int | None = None, out: str | None = None,
        experiment: str | None = None, quiet: bool = True) -> int:
    try:
        text = None
        if config_path is not None:
            with open(config_path) as fh:
                text = fh.read()
        cfg = parse_config(text)
        if seed is not None:
            cfg["run"]["seed"] = seed
        if experiment is not None:
            cfg["run"]["experiment"] = experiment
        if experiment is not None and experiment not in RUNNERS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        _params(cfg)
        code, _, _ = run_config(cfg, out, quiet)
        return code
    except (ConfigError, OSError, ValueError, GeometryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ccgeom", description="Run a ccgeom experiment.")
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--seed", type=int, metavar="N")
    ap.add_argument("--out", metavar="DIR")
    ap.add_argument("--experiment", metavar="NAME")
    ap.add_argument("--quiet", action="store_true")
    ap.add_argument("--list", action="store_true", help="list experiments and exit")
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    if args.list:
        print(list_experiments())
        return 0
    return run(args.config, args.seed, args.out, args.experiment, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
