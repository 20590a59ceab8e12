import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def central_difference(f, x, step=1e-6):
    """Central finite differences of a scalar function over an array argument."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy(); xp[idx] += step
        xm = x.copy(); xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return g


def assert_grad_close(analytic, numeric, rtol=1e-4, atol=1e-8):
    scale = np.maximum(np.abs(numeric), np.abs(analytic))
    err = np.abs(analytic - numeric)
    assert np.all(err <= atol + rtol * np.maximum(scale, 1.0)), (
        f"max grad error {np.max(err / np.maximum(scale, 1.0))}")
