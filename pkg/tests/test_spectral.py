from collections import deque

import numpy as np
import pytest

from ensemblekss import spectral
from ensemblekss.evaluation import clustering_error
from ensemblekss.model import CoAssociationMatrix, SeedSpec, SpectralConfig
from ensemblekss.spectral import TooManyClustersError


def block_matrix(sizes):
    truth = np.repeat(np.arange(len(sizes)), sizes)
    return (truth[:, np.newaxis] == truth[np.newaxis, :]).astype(float), truth


def test_spectral_cluster_all_ones_blocks():
    A, truth = block_matrix([5, 7, 4])
    labels = spectral.spectral_cluster(A, SpectralConfig(K=3))
    assert clustering_error(labels, truth) == 0.0


def test_spectral_cluster_weighted_components(rng):
    A, truth = block_matrix([6, 3, 8, 5])
    weights = rng.uniform(0.1, 1.0, A.shape)
    A = A * (weights + weights.T) / 2
    labels = spectral.spectral_cluster(CoAssociationMatrix(values=A, weighted=True), SpectralConfig(K=4))
    components, count = spectral.connected_components(A)
    assert count == 4
    assert clustering_error(labels, components) == 0.0


def test_spectral_cluster_unnormalized():
    A, truth = block_matrix([4, 6])
    labels = spectral.spectral_cluster(A, SpectralConfig(K=2, normalized=False))
    assert clustering_error(labels, truth) == 0.0


def test_spectral_cluster_permutation_invariant(rng):
    A, truth = block_matrix([5, 5, 6])
    order = rng.permutation(truth.size)
    labels = spectral.spectral_cluster(A[np.ix_(order, order)], SpectralConfig(K=3, seed=SeedSpec(3)))
    assert clustering_error(labels, truth[order]) == 0.0


def test_spectral_cluster_single_point():
    assert spectral.spectral_cluster(np.zeros((1, 1)), SpectralConfig(K=1)).tolist() == [0]


def test_spectral_cluster_too_many_clusters():
    with pytest.raises(TooManyClustersError):
        spectral.spectral_cluster(np.ones((3, 3)), SpectralConfig(K=4))


def test_spectral_cluster_negative_entries():
    with pytest.raises(ValueError):
        spectral.spectral_cluster(-np.ones((3, 3)), SpectralConfig(K=2))


def test_spectral_cluster_isolated_vertex():
    A, _ = block_matrix([4, 4])
    A = np.pad(A, ((0, 1), (0, 1)))
    labels = spectral.spectral_cluster(A, SpectralConfig(K=3))
    assert labels.shape == (9,)
    assert len(set(labels.tolist())) == 3


def test_spectral_cluster_deterministic(rng):
    A = rng.uniform(0, 1, (30, 30))
    A = (A + A.T) / 2
    cfg = SpectralConfig(K=3, seed=SeedSpec(8))
    assert np.array_equal(spectral.spectral_cluster(A, cfg), spectral.spectral_cluster(A, cfg))


def test_spectral_config_validation():
    with pytest.raises(ValueError):
        SpectralConfig(K=0)


def test_connected_components_blocks():
    A, _ = block_matrix([3, 2])
    assert spectral.connected_components(A)[1] == 2


def test_connected_components_zero_matrix():
    labels, count = spectral.connected_components(np.zeros((5, 5)))
    assert count == 5
    assert sorted(labels.tolist()) == [0, 1, 2, 3, 4]


def bfs_components(adjacency):
    N = adjacency.shape[0]
    labels = -np.ones(N, dtype=int)
    current = 0
    for start in range(N):
        if labels[start] >= 0:
            continue
        labels[start] = current
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nxt in np.flatnonzero(adjacency[node]):
                if labels[nxt] < 0:
                    labels[nxt] = current
                    queue.append(nxt)
        current += 1
    return labels, current


def test_connected_components_geometric_graph(rng):
    points = rng.uniform(0, 1, (40, 2))
    distances = np.linalg.norm(points[:, np.newaxis] - points[np.newaxis, :], axis=-1)
    A = np.where(distances < 0.15, 1.0 - distances, 0.0)
    labels, count = spectral.connected_components(A)
    oracle, oracle_count = bfs_components(A > 0)
    assert count == oracle_count
    assert clustering_error(labels, oracle) == 0.0


def test_connected_components_tolerance():
    A = np.array([[0, 0.05, 0], [0.05, 0, 0.5], [0, 0.5, 0]])
    assert spectral.connected_components(A, tol=0.1)[1] == 2
