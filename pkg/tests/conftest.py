import numpy as np
import pytest

from fcmreduce.fcm import Fcm


def random_fcm(rng, n_min=3, n_max=8, density=0.5, prefix="C"):
    """Random FCM for property tests: n concepts, sparse signed weights,
    random activation. Guaranteed at least one edge."""
    n = int(rng.integers(n_min, n_max + 1))
    weights = rng.uniform(-1.0, 1.0, size=(n, n))
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    weights = np.where(mask, weights, 0.0)
    if not np.any(weights):
        i, j = 0, 1
        weights[i, j] = rng.uniform(0.1, 1.0)
    activation = rng.uniform(0.0, 1.0, size=n)
    labels = tuple(f"{prefix}{i}" for i in range(n))
    return Fcm(labels, weights, activation)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
