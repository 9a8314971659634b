import numpy as np
import pytest

from epiverify import GaussianMixture


@pytest.fixture(scope="session")
def std1():
    return GaussianMixture.standard(1)


@pytest.fixture(scope="session")
def bimodal():
    """0.5 N(-2, 1) + 0.5 N(2, 1)"""
    return GaussianMixture.from_components([(0.5, [-2.0], [[1.0]]), (0.5, [2.0], [[1.0]])])


@pytest.fixture(scope="session")
def narrow_pair():
    """0.5 N(-1, 1) + 0.5 N(1, 1)"""
    return GaussianMixture.from_components([(0.5, [-1.0], [[1.0]]), (0.5, [1.0], [[1.0]])])


@pytest.fixture(scope="session")
def gauss2d_corr():
    return GaussianMixture.gaussian([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])


@pytest.fixture(scope="session")
def mix2d():
    return GaussianMixture.from_components(
        [
            (0.5, [-1.0, -1.0], [[0.8, 0.0], [0.0, 0.8]]),
            (0.5, [1.0, 1.0], [[1.0, -0.3], [-0.3, 1.0]]),
        ]
    )


@pytest.fixture(scope="session")
def mix3d():
    rng = np.random.default_rng(0)
    comps = []
    for w, center in [(0.4, -1.0), (0.6, 0.8)]:
        a = rng.normal(size=(3, 3)) * 0.2
        cov = np.eye(3) * 0.8 + a @ a.T
        comps.append((w, np.full(3, center), cov))
    return GaussianMixture.from_components(comps)
