import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def smooth_random(grid, rng, width=None, count=1):
    """Low-pass filtered noise: resolved, nonconstant, reproducible."""
    width = grid.half_length / 8 if width is None else width
    noise = rng.standard_normal((count, *grid.shape))
    axes = tuple(range(1, grid.dim + 1))
    nh = np.fft.fftn(noise, axes=axes) * np.exp(-0.5 * grid.k_squared * width**2)
    out = np.fft.ifftn(nh, axes=axes).real
    return out[0] if count == 1 else out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
