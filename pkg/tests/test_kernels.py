import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from ccgeom import kernels
from ccgeom import spaceform as sf

from .conftest import KS

BACKENDS = sorted(kernels.BACKENDS)


def _scipy_cross(k, r, t1, t2, phi):
    f = lambda th: float(sf.polar_distance(k, t1, r, th) + sf.polar_distance(k, t2, r, phi - th))
    grid = np.linspace(0, phi, 401)
    j = int(np.argmin([f(x) for x in grid]))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    if hi <= lo:
        return f(lo), lo
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return res.fun, res.x


def _inputs(k, r, m, seed):
    rng = np.random.default_rng(seed)
    return r * rng.random(m), r * rng.random(m), math.pi * rng.random(m)


class TestCrossDistance:
    def test_compiled_backend_present(self):
        assert kernels.BACKEND in kernels.BACKENDS
        assert "python" in kernels.BACKENDS

    @pytest.mark.parametrize("backend", BACKENDS)
    @pytest.mark.parametrize("k", KS)
    def test_against_scipy(self, backend, k):
        r = 1.0
        t1, t2, phi = _inputs(k, r, 200, 1 + k)
        v, a = kernels.get_backend(backend).cross_distance(k, r, t1, t2, phi, 64, 1e-12)
        for i in range(200):
            ref, _ = _scipy_cross(k, r, t1[i], t2[i], phi[i])
            assert v[i] == pytest.approx(ref, abs=1e-9)
            assert 0.0 <= a[i] <= phi[i] + 1e-15

    @pytest.mark.parametrize("k", KS)
    def test_backends_agree(self, k):
        if len(BACKENDS) < 2:
            pytest.skip("compiled extension not built")
        t1, t2, phi = _inputs(k, 1.0, 5000, 7)
        a = kernels.get_backend("cython").cross_distance(k, 1.0, t1, t2, phi, 64, 1e-12)
        b = kernels.get_backend("python").cross_distance(k, 1.0, t1, t2, phi, 64, 1e-12)
        np.testing.assert_allclose(a[0], b[0], atol=1e-12)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_flat_closed_form(self, backend):
        # k=0, both points at the center: every rim route has length 2r
        v, _ = kernels.get_backend(backend).cross_distance(0, 1.5, [0.0], [0.0], [1.0], 16, 1e-12)
        assert v[0] == pytest.approx(3.0)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_zero_angle(self, backend):
        v, a = kernels.get_backend(backend).cross_distance(-1, 1.0, [0.2], [0.7], [0.0], 16, 1e-12)
        assert v[0] == pytest.approx(0.8 + 0.3) and a[0] == 0.0

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_validation(self, backend):
        mod = kernels.get_backend(backend)
        with pytest.raises(ValueError):
            mod.cross_distance(0, 1.0, [0.1, 0.2], [0.1], [0.1], 16, 1e-12)
        with pytest.raises(ValueError):
            mod.cross_distance(0, 1.0, [0.1], [0.1], [0.1], 2, 1e-12)

    def test_blocking_consistent(self, monkeypatch):
        from ccgeom import _kernels_py

        t1, t2, phi = _inputs(1, 1.0, 300, 3)
        whole = _kernels_py.cross_distance(1, 1.0, t1, t2, phi, 64, 1e-12)
        monkeypatch.setattr(_kernels_py, "_BLOCK", 64 * 7)
        parts = _kernels_py.cross_distance(1, 1.0, t1, t2, phi, 64, 1e-12)
        # the golden-section stop test is per block, so values may move by an ulp
        np.testing.assert_allclose(whole[0], parts[0], rtol=0, atol=1e-14)

    @pytest.mark.parametrize("k", KS)
    @given(t1=st.floats(0, 1), t2=st.floats(0, 1), phi=st.floats(0, math.pi))
    def test_bounds(self, k, t1, t2, phi):
        # no shorter than the straight rim-to-rim legs, no longer than either endpoint route
        v, _ = kernels.cross_distance(k, 1.0, [t1], [t2], [phi], 64, 1e-12)
        assert v[0] >= (1 - t1) + (1 - t2) - 1e-12
        ends = min(float(sf.polar_distance(k, t2, 1.0, phi)) + 1 - t1,
                   float(sf.polar_distance(k, t1, 1.0, phi)) + 1 - t2)
        assert v[0] <= ends + 1e-12
