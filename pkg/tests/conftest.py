import numpy as np
import pytest

from ensemblekss import synth
from ensemblekss.model import SeedSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def orthogonal_lines():
    """20 points on each of the lines span(e1) and span(e2) in R^4, with random signs and lengths"""
    gen = np.random.default_rng(7)
    data = np.zeros((4, 40))
    data[0, :20] = gen.uniform(0.5, 2.0, 20) * gen.choice([-1, 1], 20)
    data[1, 20:] = gen.uniform(0.5, 2.0, 20) * gen.choice([-1, 1], 20)
    truth = np.repeat([0, 1], 20)
    return data, truth


@pytest.fixture
def small_instance():
    return synth.gen_random_uos(D=12, K=3, dims=2, counts=15, sigma=0.0, seed=SeedSpec(5))


@pytest.fixture
def orthogonal_uos():
    """Factory for K mutually orthogonal d-dimensional coordinate subspaces of R^D, Nk unit points each"""
    def make(D, K, d, Nk, seed):
        identity = np.eye(D)
        bases = [identity[:, k * d:(k + 1) * d] for k in range(K)]
        return synth.draw_points(bases, [Nk] * K, 0.0, SeedSpec(seed))
    return make
