import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from ccgeom.errors import DomainError
from ccgeom.ghlab import (
    GraphOracle,
    directed_hausdorff,
    gh_exact_small,
    gh_lower,
    graph_oracle,
    hausdorff,
    perturb_metric,
)
from ccgeom.modelspace import ModelParams, ModelPoint, PointSet, base_points, involution_A, pair_distances, sample_set
from ccgeom.strainer import FiniteMetricSpace


def space(points):
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return FiniteMetricSpace(cdist(X, X))


def brute_gh(X, Y):
    """Half the least distortion over every relation covering both sides."""
    cells = list(itertools.product(range(len(X)), range(len(Y))))
    best = math.inf
    for mask in range(1, 1 << len(cells)):
        R = [cells[i] for i in range(len(cells)) if mask >> i & 1]
        if {a for a, _ in R} != set(range(len(X))) or {b for _, b in R} != set(range(len(Y))):
            continue
        dis = max(abs(X.dist[a, c] - Y.dist[b, d]) for a, b in R for c, d in R)
        best = min(best, dis)
    return 0.5 * best


tiny = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=3)
small = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=6)


class TestHausdorff:
    def test_examples(self):
        S = space([[0, 0], [3, 4], [1, 0]])
        assert hausdorff(S, [0, 1], [0, 1]) == 0
        assert directed_hausdorff(S, [0], [0, 1]) == 0
        assert hausdorff(S, [0], [1]) == pytest.approx(5.0)
        assert hausdorff(S, [0, 2], [0]) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            hausdorff(S, [], [0])


class TestGromovHausdorff:
    def test_self_is_zero(self):
        S = space(np.random.default_rng(0).random((6, 2)))
        assert gh_exact_small(S, S) == 0.0

    def test_two_points_vs_point(self):
        assert gh_exact_small(space([0.0, 1.0]), space([0.0])) == pytest.approx(0.5)

    def test_size_limit(self):
        S = space(np.arange(7.0))
        with pytest.raises(DomainError):
            gh_exact_small(S, S)

    @given(a=tiny, b=tiny)
    def test_matches_brute_force(self, a, b):
        X, Y = space(a), space(b)
        assert gh_exact_small(X, Y) == pytest.approx(brute_gh(X, Y), abs=1e-12)

    @given(a=small, b=small)
    def test_symmetric(self, a, b):
        X, Y = space(a), space(b)
        assert gh_exact_small(X, Y) == pytest.approx(gh_exact_small(Y, X), abs=1e-12)

    def test_lower_examples(self):
        S = space([[0, 0], [1, 0], [0, 2]])
        assert gh_lower(S, S) == 0
        assert gh_lower(space([0.0, 2.0]), space([0.0, 1.0])) >= 0.5

    def test_lower_below_exact_100_pairs(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            X = space(rng.random((rng.integers(1, 7), 2)) * 3)
            Y = space(rng.random((rng.integers(1, 7), 2)) * 3)
            assert gh_lower(X, Y) <= gh_exact_small(X, Y) + 1e-12


class TestPerturb:
    def test_zero_is_identity(self):
        S = space(np.random.default_rng(1).random((8, 2)))
        T = perturb_metric(S, 0.0, 5)
        np.testing.assert_array_equal(T.dist, S.dist)

    @pytest.mark.parametrize("a", [0.01, 0.05, 0.2])
    def test_bounds_and_closure(self, a):
        S = space(np.random.default_rng(2).random((15, 3)))
        T = perturb_metric(S, a, 7)
        raw = T.meta["raw"]
        off = ~np.eye(15, dtype=bool)
        ratio = raw[off] / S.dist[off]
        assert ratio.min() >= 1 - a - 1e-12 and ratio.max() <= 1 + a + 1e-12
        assert np.all(T.dist <= raw + 1e-15)
        viol = T.dist[:, :, None] - T.dist[:, None, :] - T.dist[None, :, :].transpose(0, 2, 1)
        assert viol.max() <= 1e-12
        assert T.meta["gh_lower"] <= T.meta["gh_bound"] + 1e-12

    def test_amplitude_range(self):
        with pytest.raises(DomainError):
            perturb_metric(space([0.0, 1.0]), 0.3, 0)


class TestGraphOracle:
    def test_same_sheet_flat(self):
        p = ModelParams(2, 0, 1.0)
        P = PointSet.make("DoubleDisk", p, [0.3, 0.5], [[1, 0], [0, 1]])
        Q = PointSet.make("DoubleDisk", p, [0.6, 0.5], [[0, 1], [0, -1]])
        want = np.array([math.hypot(0.3, 0.6), 1.0])
        got = graph_oracle("DoubleDisk", p, p.r / 200, P, Q)
        assert np.all(got >= want - 1e-9)
        np.testing.assert_allclose(got, want, rtol=0.02)

    @pytest.mark.parametrize("k", (-1, 0, 1))
    def test_cross_sheet_centers(self, k):
        p = ModelParams(2, k, 1.0)
        c = base_points(p).p0
        got = graph_oracle("DoubleDisk", p, p.r / 100, PointSet.from_points([c]), PointSet.from_points([involution_A(c)]))
        assert got[0] == pytest.approx(2.0, rel=0.02)

    @pytest.mark.parametrize("kind", ["DoubleDisk", "Crosscap", "Purse"])
    def test_never_undercuts_and_refines(self, kind):
        p = ModelParams(2, 1, 1.0)
        P, Q = sample_set(kind, p, 30, seed=1), sample_set(kind, p, 30, seed=2)
        g = GraphOracle(kind, p, 0.04)
        a = g.distances(P, Q)
        fine = g.refine()
        b = fine.distances(P, Q)
        d = pair_distances(P, Q)
        assert np.all(a >= d - 1e-9) and np.all(b >= d - 1e-9)
        assert np.all(b <= a + 1e-12)
        assert fine.size > g.size

    def test_same_point_zero(self):
        p = ModelParams(2, 0, 1.0)
        P = sample_set("Crosscap", p, 3, seed=1)
        np.testing.assert_array_equal(graph_oracle("Crosscap", p, 0.05, P, P), 0.0)

    def test_errors(self):
        p = ModelParams(2, 0, 1.0)
        with pytest.raises(DomainError):
            GraphOracle("Disk", p, 0.0)
        g = GraphOracle("Disk", p, 0.1)
        with pytest.raises(DomainError):
            g.distances(sample_set("Purse", p, 2), sample_set("Purse", p, 2))
        with pytest.raises(DomainError):
            GraphOracle("Purse", p, 0.1, parent=g)
