import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_kraus_map(n, k, rng):
    from qmap.superop import superop_from_kraus

    ops = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(k)]
    return superop_from_kraus(n, ops), ops
