import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ccgeom.modelspace import ModelParams

settings.register_profile(
    "ccgeom", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ccgeom")

KS = (-1, 0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=KS, ids=lambda k: f"k{k}")
def params2(request):
    return ModelParams(2, request.param, 1.0)


def random_sf_points(k, n, m, rng, sign=1, tmax=None):
    """Ambient coordinates of m points on the + component, built by hand."""
    tmax = (3.0 if k == 1 else 2.0) if tmax is None else tmax
    t = rng.uniform(0.0, tmax, m)
    u = rng.standard_normal((m, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    X = np.empty((m, n + 1))
    if k == 1:
        X[:, 0] = np.cos(t)
        X[:, 1:] = np.sin(t)[:, None] * u
    elif k == 0:
        X[:, 0] = sign
        X[:, 1:] = t[:, None] * u
    else:
        X[:, 0] = sign * np.cosh(t)
        X[:, 1:] = np.sinh(t)[:, None] * u
    return X


def pytest_terminal_summary(terminalreporter):
    from .verdicts import summary_lines

    lines = list(summary_lines())
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
