import numpy as np
import pytest

from unbiased_cso.ssm import GAUSSIAN, SsmParams, simulate
from unbiased_cso.toy import default_instance

BASE_XI = (0.3, 0.95, 0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy():
    return default_instance()


@pytest.fixture(scope="session")
def gaussian_data():
    """Gaussian series at the base parameters, T = 30."""
    return simulate(SsmParams(*BASE_XI), GAUSSIAN, 30, np.random.default_rng(1))


def central_difference(fn, x, h=1e-6):
    """Jacobian of ``fn`` at ``x`` by central differences; rows index outputs."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(fn(x + e), dtype=float) - np.asarray(fn(x - e), dtype=float)) / (2 * h))
    return np.stack(cols, axis=-1)


def rel_err(a, b, floor=1e-12):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))
