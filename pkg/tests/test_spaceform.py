import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from ccgeom import spaceform as sf
from ccgeom.errors import AmbiguityError, DegeneracyError, DomainError

from .conftest import KS, random_sf_points


def _arccos_distance(k, x, y):
    # textbook formulas, used only as an oracle for the half-angle versions
    if k == 1:
        return math.acos(max(-1.0, min(1.0, float(np.dot(x, y)))))
    if k == 0:
        return float(np.linalg.norm(x - y))
    return math.acosh(max(1.0, -float(sf.form(-1, x, y))))


class TestPoints:
    def test_only_three_curvatures(self):
        for bad in (2, -2, 0.5, True):
            with pytest.raises(DomainError):
                sf.check_curvature(bad)

    @pytest.mark.parametrize("k,coords", [
        (1, [1.0, 1.0, 0.0]),
        (0, [0.5, 1.0, 2.0]),
        (-1, [1.0, 1.0, 0.0]),
    ])
    def test_rejects_off_model(self, k, coords):
        with pytest.raises(DomainError):
            sf.SpaceFormPoint(k, coords)

    def test_hyperbolic_components(self):
        x = sf.from_polar(-1, 0.3, [1.0, 0.0], sign=-1)
        assert x.component == -1
        with pytest.raises(DomainError):
            sf.distance(x, sf.pole(-1, 2))

    def test_tangent_check(self):
        x = sf.pole(1, 2)
        with pytest.raises(DomainError):
            sf.TangentVector(x, [1.0, 0.0, 0.0])


class TestDistance:
    def test_sphere_basis(self):
        assert sf.distance(sf.SpaceFormPoint(1, [1, 0, 0]), sf.SpaceFormPoint(1, [0, 1, 0])) == pytest.approx(math.pi / 2)

    def test_flat_345(self):
        assert sf.distance(sf.SpaceFormPoint(0, [1, 0, 0]), sf.SpaceFormPoint(0, [1, 3, 4])) == pytest.approx(5.0)

    def test_hyperbolic_unit(self):
        y = sf.SpaceFormPoint(-1, [math.cosh(1), math.sinh(1), 0])
        assert sf.distance(sf.pole(-1, 2), y) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("k", KS)
    def test_matches_textbook_formula(self, k, rng):
        X = random_sf_points(k, 3, 200, rng)
        Y = random_sf_points(k, 3, 200, rng)
        for x, y in zip(X, Y):
            d = sf.distance(sf.SpaceFormPoint(k, x), sf.SpaceFormPoint(k, y))
            assert d == pytest.approx(_arccos_distance(k, x, y), abs=1e-7)

    @pytest.mark.parametrize("k", KS)
    def test_polar_distance_agrees(self, k, rng):
        t1, t2 = rng.uniform(0, 1.2, 2)
        a = rng.uniform(0, math.pi)
        x = sf.from_polar(k, t1, [1.0, 0.0])
        y = sf.from_polar(k, t2, [math.cos(a), math.sin(a)])
        assert float(sf.polar_distance(k, t1, t2, a)) == pytest.approx(sf.distance(x, y), abs=1e-13)

    @pytest.mark.parametrize("k", KS)
    def test_triangle_inequality_bulk(self, k):
        rng = np.random.default_rng(k + 10)
        P = [random_sf_points(k, 2, 20000, rng) for _ in range(3)]
        t = [rng.uniform(0, 1.5, 20000) for _ in range(3)]
        del t
        d = []
        for A, B in ((0, 1), (1, 2), (0, 2)):
            d.append(np.array([sf.distance(sf.SpaceFormPoint(k, a), sf.SpaceFormPoint(k, b))
                               for a, b in zip(P[A][:2000], P[B][:2000])]))
        assert np.all(d[2] <= d[0] + d[1] + 1e-10)


class TestExpLog:
    def test_great_circle(self):
        x = sf.pole(1, 2)
        v = sf.TangentVector(x, [0, 1, 0])
        y = sf.exp_map(x, v, 0.7)
        np.testing.assert_allclose(y.coords, [math.cos(0.7), math.sin(0.7), 0], atol=1e-15)

    def test_flat_zero_step(self):
        x = sf.SpaceFormPoint(0, [1, 0.3, -0.2])
        v = sf.TangentVector(x, [0, 0.6, 0.8])
        assert sf.exp_map(x, v, 0.0) == x

    def test_hyperbolic_parametrization(self):
        x = sf.pole(-1, 2)
        y = sf.exp_map(x, sf.TangentVector(x, [0, 1, 0]), 1.0)
        np.testing.assert_allclose(y.coords, [math.cosh(1), math.sinh(1), 0], atol=1e-14)

    def test_nonunit_rejected(self):
        x = sf.pole(1, 2)
        with pytest.raises(DomainError):
            sf.exp_map(x, sf.TangentVector(x, [0, 2, 0]), 1.0)

    def test_flat_log(self):
        v = sf.log_map(sf.SpaceFormPoint(0, [1, 0, 0]), sf.SpaceFormPoint(0, [1, 2, 0]))
        np.testing.assert_allclose(v.comps, [0, 1, 0])

    def test_sphere_log_inverts_exp(self):
        t = 2.0
        y = sf.SpaceFormPoint(1, [math.cos(t), math.sin(t), 0])
        np.testing.assert_allclose(sf.log_map(sf.pole(1, 2), y).comps, [0, 1, 0], atol=1e-14)

    def test_antipodal_ambiguous(self):
        with pytest.raises(AmbiguityError):
            sf.log_map(sf.pole(1, 2), sf.SpaceFormPoint(1, [-1, 0, 0]))

    def test_coincident_degenerate(self):
        with pytest.raises(DegeneracyError):
            sf.log_map(sf.pole(0, 2), sf.pole(0, 2))

    @pytest.mark.parametrize("k", KS)
    def test_round_trip_bulk(self, k):
        rng = np.random.default_rng(100 + k)
        X = random_sf_points(k, 3, 2000, rng, tmax=1.4)
        Y = random_sf_points(k, 3, 2000, rng, tmax=1.4)
        worst = 0.0
        for a, b in zip(X, Y):
            x, y = sf.SpaceFormPoint(k, a), sf.SpaceFormPoint(k, b)
            d = sf.distance(x, y)
            if d < 1e-6:
                continue
            z = sf.exp_map(x, sf.log_map(x, y), d)
            worst = max(worst, float(np.abs(z.coords - y.coords).max()))
        assert worst <= 1e-9


class TestComparisonAngle:
    def test_right_triangle(self):
        assert sf.comparison_angle(0, 3, 4, 5) == pytest.approx(math.pi / 2)

    def test_octant(self):
        h = math.pi / 2
        assert sf.comparison_angle(1, h, h, h) == pytest.approx(h)

    def test_hyperbolic_equilateral(self):
        # independent route: build the triangle on the hyperboloid and read
        # the vertex angle off the tangent directions
        x = sf.pole(-1, 2)
        y = sf.exp_map(x, sf.TangentVector(x, [0, 1, 0]), 1.0)
        best = None
        lo, hi = 0.0, math.pi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            z = sf.exp_map(x, sf.TangentVector(x, [0, math.cos(mid), math.sin(mid)]), 1.0)
            if sf.distance(y, z) < 1.0:
                lo = mid
            else:
                hi = mid
            best = mid
        assert sf.comparison_angle(-1, 1, 1, 1) == pytest.approx(best, abs=1e-12)
        c = math.cosh(1)
        assert best == pytest.approx(math.acos(c * (c - 1) / math.sinh(1) ** 2), abs=1e-12)

    @pytest.mark.parametrize("k", KS)
    @given(a=st.floats(0.01, 1.4), b=st.floats(0.01, 1.4))
    def test_flat_hinge(self, k, a, b):
        assert sf.comparison_angle(k, a, b, a + b) == math.pi

    @pytest.mark.parametrize("k", KS)
    def test_monotone_in_opposite_side(self, k):
        a, b = 0.8, 0.6
        c = np.linspace(abs(a - b), a + b, 400)
        ang = sf.comparison_angles(k, np.full_like(c, a), np.full_like(c, b), c)
        assert np.all(np.diff(ang) >= -1e-12)

    def test_errors(self):
        with pytest.raises(DomainError):
            sf.comparison_angle(0, 1, 1, 3)
        with pytest.raises(DegeneracyError):
            sf.comparison_angle(0, 0, 1, 1)

    def test_vectorized_nan_on_bad(self):
        out = sf.comparison_angles(0, [1, 0, 1], [1, 1, 1], [1, 1, 5])
        assert not np.isnan(out[0]) and np.isnan(out[1]) and np.isnan(out[2])


class TestBallVolume:
    @pytest.mark.parametrize("k", KS)
    def test_interval(self, k):
        assert sf.ball_volume(1, k, 0.7) == pytest.approx(1.4)

    def test_flat_disk(self):
        assert sf.ball_volume(2, 0, 0.9) == pytest.approx(math.pi * 0.81)

    def test_spherical_cap_quadrature(self):
        r = 1.1
        q, _ = integrate.quad(math.sin, 0, r)
        assert sf.ball_volume(2, 1, r) == pytest.approx(2 * math.pi * q, rel=1e-12)

    @pytest.mark.parametrize("n,k", [(3, 1), (3, -1), (4, 1), (4, -1), (5, 0)])
    def test_general_quadrature(self, n, k):
        f = {1: math.sin, 0: lambda s: s, -1: math.sinh}[k]
        q, _ = integrate.quad(lambda s: f(s) ** (n - 1), 0, 0.8)
        assert sf.ball_volume(n, k, 0.8) == pytest.approx(sf.sphere_area(n) * q, rel=1e-10)

    @pytest.mark.parametrize("k", KS)
    def test_increasing(self, k):
        v = [sf.ball_volume(3, k, r) for r in np.linspace(0.05, 1.5, 30)]
        assert np.all(np.diff(v) > 0)

    def test_monte_carlo(self):
        rng = np.random.default_rng(5)
        # unit sphere S^2: uniform points, fraction within r of the pole
        g = rng.standard_normal((200000, 3))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        hit = np.arccos(np.clip(g[:, 0], -1, 1)) <= 0.9
        est = 4 * math.pi * hit.mean()
        se = 4 * math.pi * hit.std() / math.sqrt(hit.size)
        assert abs(est - sf.ball_volume(2, 1, 0.9)) <= 3 * se

    def test_bad_radius(self):
        with pytest.raises(DomainError):
            sf.ball_volume(2, 0, 0.0)
