import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import sasaki  # noqa: F401  (enables float64)
from sasaki.models import make_model

# JAX traces on first use, so examples are few and unhurried.
settings.register_profile(
    "default",
    max_examples=12,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

MODEL_SPECS = ("euclidean:2", "sphere:1", "halfplane", "torus:2")


@functools.lru_cache(maxsize=None)
def model(spec: str):
    """One manifold object per spec, so jitted kernels are shared across tests."""
    return make_model(spec)


@pytest.fixture(params=MODEL_SPECS)
def M(request):
    return model(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_point(M, rng):
    lo, hi = M.box()
    return rng.uniform(lo, hi)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "SUMMARY", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.SUMMARY):
        terminalreporter.write_line(mod.SUMMARY[k])
