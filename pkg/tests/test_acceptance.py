"""Acceptance criteria 1-13, one class per criterion.

Each class records a PASS/FAIL line (printed in the terminal summary) and
then asserts. Regression pins come from tests/baselines.json, written by
scripts/dense_baselines.py through the numpy kernel on a 1024-point
crossing grid.
"""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from ccgeom import spaceform as sf
from ccgeom import ghlab
from ccgeom.cli import parse_config, run_config
from ccgeom.embedding import (
    ScanConfig,
    SmoothedEmbedding,
    equicontinuity_scan,
    gradient_bound_scan,
    immersion_scan,
    injectivity_scan,
    phi_values,
)
from ccgeom.modelspace import (
    ModelKind,
    ModelParams,
    PointSet,
    apply_A,
    base_points,
    involution_A,
    model_distance,
    pair_distances,
    sample_set,
)
from ccgeom.pursemap import PurseRegionSpec, fiber_scan, submersion_scan
from ccgeom.strainer import (
    FiniteMetricSpace,
    GlobalStrainerSpec,
    SphereMap,
    StrainerSpec,
    is_strained,
    strained_ball_distortion,
)
from ccgeom.volcomp import bg_ratio_check, mc_ball_volume, radius_estimate, swiss_cheese_kappa

from .conftest import KS
from .verdicts import record

BASE = json.loads((Path(__file__).parent / "baselines.json").read_text())
DD = ModelKind.DOUBLE_DISK
# smoothing sample count; ledgered (4096 would take minutes per scan)
SCAN = ScanConfig(mc_samples=64)


def _unit(rng, m, n):
    u = rng.standard_normal((m, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# 1


class TestC1SpaceForms:
    @pytest.mark.parametrize("k", KS)
    def test_exp_log_round_trip(self, k):
        rng = np.random.default_rng([1, k + 1])
        tmax = 3.0 if k == 1 else 2.5
        worst = 0.0
        for _ in range(1000):
            x = sf.from_polar(k, rng.uniform(0, tmax), _unit(rng, 1, 3)[0])
            y = sf.from_polar(k, rng.uniform(0, tmax), _unit(rng, 1, 3)[0])
            d = sf.distance(x, y)
            if d < 1e-6 or (k == 1 and d > math.pi - 1e-3):
                continue
            z = sf.exp_map(x, sf.log_map(x, y), d)
            worst = max(worst, float(np.abs(z.coords - y.coords).max()))
        assert record(1, worst <= 1e-9, f"k={k} exp/log {worst:.2e}")

    @pytest.mark.parametrize("k,t", [(1, math.pi / 2), (0, 1.7), (-1, 2.3), (1, 0.4), (-1, 1e-7)])
    def test_distance_closed_forms(self, k, t):
        x = sf.pole(k, 2)
        y = sf.from_polar(k, t, [0.6, 0.8])
        got = sf.distance(x, y)
        # two points at radius t on opposite sides: distance 2t (below pi on the sphere)
        w = sf.from_polar(k, t, [-0.6, -0.8])
        both = sf.distance(y, w)
        ok = abs(got - t) <= 1e-12 * max(1, t) and abs(both - 2 * t) <= 1e-12 * max(1, t)
        assert record(1, ok, "")

    @pytest.mark.parametrize("k", KS)
    def test_comparison_angle_degenerate(self, k):
        rng = np.random.default_rng([2, k + 1])
        a, b = rng.uniform(0.05, 0.7, (2, 200))
        straight = [sf.comparison_angle(k, float(p), float(q), float(p + q)) for p, q in zip(a, b)]
        folded = [sf.comparison_angle(k, float(p), float(q), float(abs(p - q))) for p, q in zip(a, b)]
        ok = all(v == math.pi for v in straight) and max(folded) <= 1e-6
        assert record(1, ok, "") and max(folded) <= 1e-6

    @pytest.mark.parametrize("k", KS)
    def test_triangle_inequality(self, k):
        rng = np.random.default_rng([3, k + 1])
        m, n = 100_000, 3
        tmax = math.pi if k == 1 else 3.0
        t = rng.uniform(0, tmax, (3, m))
        u = np.stack([_unit(rng, m, n) for _ in range(3)])

        def d(a, b):
            return sf.polar_distance(k, t[a], t[b], sf.unit_angle(u[a], u[b]))

        dxy, dyz, dxz = d(0, 1), d(1, 2), d(0, 2)
        slack = float((dxz - dxy - dyz).max())
        # the vectorized route is the scalar distance on a subsample
        sub = [sf.distance(sf.from_polar(k, t[0, i], u[0, i]), sf.from_polar(k, t[1, i], u[1, i]))
               for i in range(300)]
        agree = float(np.abs(np.array(sub) - dxy[:300]).max())
        ok = slack <= 1e-10 and agree <= 1e-12
        assert record(1, ok, f"k={k} triangle slack {slack:.2e}"), (slack, agree)


# ---------------------------------------------------------------------------
# 2, 3


def _plus_points(p, m, seed):
    P = sample_set(DD, p, m, "uniform", seed)
    return PointSet.make(DD, p, P.t, P.u, np.ones(m))


class TestC2CoordinateIdentity:
    @pytest.mark.parametrize("k", KS)
    def test_f_i_equals_x_i(self, k):
        p = ModelParams(3, k, 1.0)
        P = _plus_points(p, 1000, 20 + k)
        err = float(np.abs(phi_values(P)[:, 1:] - P.ambient()[:, 1:]).max())
        assert record(2, err <= 1e-9, f"k={k} {err:.2e}")


class TestC3Equivariance:
    @pytest.mark.parametrize("k", KS)
    def test_phi_odd_under_A(self, k):
        p = ModelParams(2, k, 1.0)
        P = sample_set(DD, p, 1000, "uniform", 30 + k)
        err = float(np.abs(phi_values(apply_A(P)) + phi_values(P)).max())
        assert record(3, err <= 1e-9, f"k={k} {err:.2e}")


# ---------------------------------------------------------------------------
# 4-7 on (2, k, 1.0); the scans of 5-7 use (2, 1, 1.0)


class TestC4GradientBound:
    @pytest.mark.parametrize("k", KS)
    def test_gradient_at_most_two(self, k):
        rep = gradient_bound_scan(ModelParams(2, k, 1.0), SCAN, 1000)
        g = rep.results["max_grad"]
        assert record(4, rep.checks["grad_bound"], f"k={k} max {g:.4f}")


class TestC5Injectivity:
    def test_min_separation(self):
        b = BASE["injectivity"]
        p = ModelParams(*b["params"])
        rep = injectivity_scan(p, ScanConfig(nu=b["nu"], seed=b["seed"]), b["pairs"], smoothed=False)
        sep = rep.results["min_separation"]
        pinned = abs(sep - b["min_separation"]) <= 1e-8 * b["min_separation"]
        same = rep.results["pairs_tested"] == b["pairs_tested"]
        ok = sep > 0 and pinned and same
        assert record(5, ok, f"min {sep:.6f} (pinned {b['min_separation']:.6f})")


@pytest.fixture(scope="module")
def immersion():
    return immersion_scan(ModelParams(2, 1, 1.0), SCAN, 1000, 16)


class TestC6Immersion:
    def test_lambda_positive(self, immersion):
        res = immersion.results
        ok = res["grid_points"] == 1000 and res["lambda_est"] > 0
        assert record(6, ok, f"lambda_est {res['lambda_est']:.4f}")

    def test_pole_exclusion(self, immersion):
        res = immersion.results
        assert record(6, res["pole_points"] > 0 and res["lambda_pole_excluded"] > 0,
                      f"pole-excluded {res['lambda_pole_excluded']:.4f}")


EQ_POINTS = 400


@pytest.fixture(scope="module")
def equicontinuity(immersion):
    lam = immersion.results["lambda_est"]
    cfg = ScanConfig(mc_samples=64, rho=0.01)
    rep = equicontinuity_scan(ModelParams(2, 1, 1.0), cfg, EQ_POINTS, lam=lam)
    return rep, lam


class TestC7Equicontinuity:
    @pytest.mark.xfail(strict=True, reason="f_i has a kink across the gluing sphere: pairs straddling the "
                                           "rim give a defect near 0.5 at rho = r/100 (see decisions ledger)")
    def test_defect_below_half_lambda(self, equicontinuity):
        rep, lam = equicontinuity
        sup = rep.results["defect_sup"]
        ok = record(7, sup < lam / 2, f"sup {sup:.4f} vs lambda/2 {lam / 2:.4f} (expected fail, ledgered)")
        assert ok

    def test_interior_pairs_below_half_lambda(self, equicontinuity):
        # same scan, pairs whose base point is deeper than rho inside one sheet
        rep, lam = equicontinuity
        p = ModelParams(2, 1, 1.0)
        X = sample_set(DD, p, EQ_POINTS, "uniform", 29)
        tab = np.array(rep.tables["defects"][1], dtype=float)
        inner = (p.r - X.t[tab[:, 0].astype(int)]) > 0.01
        sup = float(tab[inner & (tab[:, 2] <= 0.01), 3].max())
        assert inner.sum() > 100
        assert sup < lam / 2, (sup, lam)


# ---------------------------------------------------------------------------
# 8


class TestC8MetricOracle:
    @pytest.mark.parametrize("k", KS)
    def test_graph_agreement(self, k):
        p = ModelParams(2, k, 1.0)
        P = sample_set(DD, p, 100, "uniform", 40)
        Q = sample_set(DD, p, 100, "uniform", 41)
        Q = PointSet.make(DD, p, Q.t, Q.u, -P.sheet)
        solver = pair_distances(P, Q)
        graph = ghlab.GraphOracle(DD, p, p.r / 200).distances(P, Q)
        rel = float(np.abs(graph / solver - 1).max())
        under = float((graph - solver).min())
        assert record(8, rel <= 0.02 and under >= -1e-9, f"k={k} rel {rel:.4f}")

    @pytest.mark.parametrize("k", KS)
    def test_closed_forms(self, k):
        p = ModelParams(2, k, 1.0)
        p0 = base_points(p, DD)[0]
        c = model_distance(p0, involution_A(p0))
        ts = np.linspace(0, p.r, 21)
        U = _unit(np.random.default_rng(42), ts.size, 2)
        up = PointSet.make(DD, p, ts, U, np.ones(ts.size))
        down = PointSet.make(DD, p, ts, U, -np.ones(ts.size))
        err = float(np.abs(pair_distances(up, down) - 2 * (p.r - ts)).max())
        assert record(8, abs(c - 2 * p.r) <= 1e-6 and err <= 1e-6, "")


# ---------------------------------------------------------------------------
# 9


class TestC9Strainers:
    def test_round_sphere_map(self):
        dim = 3
        G = _unit(np.random.default_rng(50), 500, dim)
        E = np.vstack([np.eye(dim), -np.eye(dim), G])
        D = np.arccos(np.clip(E @ E.T, -1, 1))
        np.fill_diagonal(D, 0.0)
        S = FiniteMetricSpace(D, 1)
        sm = SphereMap(S, GlobalStrainerSpec([[i] for i in range(dim)], [[dim + i] for i in range(dim)], 0.1))
        rows = np.arange(2 * dim, len(E))
        i, j = np.triu_indices(rows.size, 1)
        dist = sm.distortion(np.c_[rows[i], rows[j]])
        assert record(9, dist <= 1e-9, f"sphere {dist:.1e}")

    def test_bgp_distortion_pinned(self):
        b = BASE["bgp"]
        _, spec, dist = strained_ball_distortion(DD, ModelParams(*b["params"]), b["samples"], b["delta"],
                                                 b["strain_r"], b["chart_radius"], b["chart_points"], b["seed"])
        ok = (spec is not None and [list(q) for q in spec.pairs] == b["pairs"]
              and dist <= 0.2 and abs(dist - b["distortion"]) <= 1e-8)
        assert record(9, ok, f"BGP {dist:.4f} (pinned {b['distortion']:.4f})")

    def test_delta_monotone(self):
        p = ModelParams(2, 0, 1.0)
        from ccgeom.strainer import ModelMetricSpace

        S = ModelMetricSpace(sample_set(DD, p, 300, "uniform", 51))
        rng = np.random.default_rng(52)
        bad = 0
        for _ in range(1000):
            idx = rng.choice(len(S), 5, replace=False)
            pairs = [(int(idx[1]), int(idx[2])), (int(idx[3]), int(idx[4]))]
            d1, d2 = np.sort(rng.uniform(0, 1.5, 2))
            a = is_strained(S, StrainerSpec(int(idx[0]), pairs, d1, 0.3))
            b = is_strained(S, StrainerSpec(int(idx[0]), pairs, d2, 0.3))
            bad += int((a.ok and not b.ok) or b.margin < a.margin - 1e-12)
        assert record(9, bad == 0, f"monotonicity violations {bad}")


# ---------------------------------------------------------------------------
# 10


def _double_disk_ball(k, r, rho):
    """Ball about the + center: the own sheet out to min(rho, r) plus the
    annulus t >= 2r - rho of the other sheet, reached through the rim."""
    V = lambda s: sf.ball_volume(2, k, s)  # noqa: E731
    return V(min(rho, r)) + (V(r) - V(2 * r - rho) if rho > r else 0.0)


class TestC10Volumes:
    def test_flat_kappa_exact(self):
        ds = np.geomspace(1e-4, 10, 50)
        assert record(10, all(swiss_cheese_kappa(2, 0, float(d)) == 0.75 for d in ds), "kappa = 3/4")

    @pytest.mark.parametrize("k", KS)
    @pytest.mark.parametrize("n", [2, 3])
    def test_kappa_below_one(self, n, k):
        kap = [swiss_cheese_kappa(n, k, float(d)) for d in np.geomspace(1e-3, 0.7, 30)]
        assert record(10, max(kap) < 1, "")

    @pytest.mark.parametrize("kind", ["DoubleDisk", "Crosscap"])
    @pytest.mark.parametrize("k", KS)
    def test_bishop_gromov(self, kind, k):
        p = ModelParams(2, k, 1.0)
        rep = bg_ratio_check(kind, base_points(p, kind)[0], [0.25, 0.5, 1.0, 1.5, 2.0], 100_000, 60)
        assert record(10, rep.checks["ratio_nonincreasing"], "")

    @pytest.mark.parametrize("k", KS)
    @pytest.mark.parametrize("rho", [0.3, 0.8, 1.4])
    def test_mc_volume(self, k, rho):
        p = ModelParams(2, k, 1.0)
        est = mc_ball_volume(DD, base_points(p, DD)[0], rho, 100_000, 61)
        want = _double_disk_ball(k, p.r, rho)
        assert record(10, abs(est.value - want) <= 3 * est.standard_error, "")


# ---------------------------------------------------------------------------
# 11


class TestC11Purse:
    def test_fibers(self):
        rep = fiber_scan(ModelParams(3, 0, 1.0), 0.25, per_axis=5)
        res = rep.results
        ok = (res["targets"] == 25 and rep.checks["single_component"] and rep.checks["chord_circle_length"]
              and rep.checks["psi_in_disk"])
        assert record(11, ok, f"length err {res['max_length_rel_error']:.3f}, |Psi| max {res['max_abs_psi']:.6f}")

    @pytest.mark.parametrize("region", ["E0", "E1"])
    def test_submersion(self, region):
        cfg = ScanConfig(mc_samples=64, strain_delta=0.3, strain_r=0.1)
        rep = submersion_scan(ModelParams(3, 0, 1.0), cfg, PurseRegionSpec(0.25, region), 40, 8)
        lam = rep.results["lambda_est"]
        assert record(11, lam > 0, f"{region} lambda {lam:.4f}")


# ---------------------------------------------------------------------------
# 12


def _euclid(pts):
    return FiniteMetricSpace(np.linalg.norm(pts[:, None] - pts[None], axis=-1))


class TestC12GromovHausdorff:
    def test_self_distance(self):
        X = _euclid(np.random.default_rng(70).random((6, 2)))
        assert record(12, ghlab.gh_exact_small(X, X) == 0.0, "")

    def test_two_points_vs_point(self):
        two = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))
        one = FiniteMetricSpace(np.zeros((1, 1)))
        assert record(12, ghlab.gh_exact_small(two, one) == 0.5, "")

    def test_lower_below_exact(self):
        rng = np.random.default_rng(71)
        worst = -math.inf
        for _ in range(100):
            a, b = rng.integers(1, 7, 2)
            X, Y = _euclid(rng.random((a, 2))), _euclid(rng.random((b, 2)))
            worst = max(worst, ghlab.gh_lower(X, Y) - ghlab.gh_exact_small(X, Y))
        assert record(12, worst <= 1e-12, "")

    def test_perturb_zero_identity(self):
        X = _euclid(np.random.default_rng(72).random((20, 2)))
        assert record(12, np.array_equal(ghlab.perturb_metric(X, 0.0, 3).dist, X.dist), "")

    def test_margin_change_factors(self, tmp_path):
        cfg = parse_config("[run]\nexperiment = gh\n[gh]\npairs = 5\n[model]\nk = 0\n")
        code, rep, _ = run_config(cfg, str(tmp_path))
        fac = rep.results["margin_change_factors"]
        ok = code == 0 and rep.checks["identity_at_zero"] and all(math.isfinite(f) for f in fac)
        assert record(12, ok, "margin factors " + ", ".join(f"{f:.3f}" for f in fac))


# ---------------------------------------------------------------------------
# 13


class TestC13CrosscapRadius:
    @pytest.mark.parametrize("k", KS)
    def test_radius_equals_r(self, k):
        p = ModelParams(2, k, 1.0)
        est = radius_estimate("Crosscap", p, 1000, 80)
        ok = abs(est.value - p.r) <= est.resolution
        assert record(13, ok, f"k={k} {est.value:.4f} +- {est.resolution:.4f}")
