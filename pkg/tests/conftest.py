import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsccert import esm_alpha, gen_gaussian, tsa

WORKERS = 2


@pytest.fixture(scope="session")
def gauss_10x20s():
    """The ten seeded 10x20 Gaussian instances shared across acceptance runs."""
    return [gen_gaussian(10, 20, seed) for seed in range(1, 11)]


@pytest.fixture(scope="session")
def gauss_20x40s():
    return [gen_gaussian(20, 40, seed) for seed in range(1, 11)]


class ResultCache:
    """Session-wide memo for expensive ESM / tree-search runs."""

    def __init__(self):
        self._esm = {}
        self._tsa = {}

    def esm(self, matrix, k):
        key = (matrix.provenance, k)
        if key not in self._esm:
            self._esm[key] = esm_alpha(matrix, k, processes=WORKERS)
        return self._esm[key]

    def tsa(self, matrix, k, l):
        key = (matrix.provenance, k, l)
        if key not in self._tsa:
            self._tsa[key] = tsa(matrix, k, l, processes=WORKERS)
        return self._tsa[key]


@pytest.fixture(scope="session")
def cache():
    return ResultCache()
