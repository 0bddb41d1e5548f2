"""Spectral clustering of affinity graphs and connected-component analysis."""
import logging
import warnings

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from ensemblekss.geometry import sign_fix
from ensemblekss.model import CoAssociationMatrix, SpectralConfig

logger = logging.getLogger(__name__)

ISOLATED_DEGREE = 1e-12


class TooManyClustersError(ValueError):
    pass


def spectral_embedding(A, K, normalized=True):
    """Rows of the K eigenvectors of the graph Laplacian with the smallest eigenvalues.

    With `normalized`, the Laplacian is I - Dg^{-1/2} A Dg^{-1/2} and the rows are
    scaled to unit length (zero rows stay zero).
    """
    A = np.asarray(A, dtype=np.float64)
    degree = A.sum(axis=1)
    if normalized:
        degree = np.where(degree > 0, degree, ISOLATED_DEGREE)
        scale = 1.0 / np.sqrt(degree)
        laplacian = np.eye(A.shape[0]) - scale[:, np.newaxis] * A * scale[np.newaxis, :]
    else:
        laplacian = np.diag(degree) - A
    laplacian = (laplacian + laplacian.T) / 2
    _, vectors = scipy.linalg.eigh(laplacian, subset_by_index=[0, K - 1])
    embedding = sign_fix(vectors)
    if normalized:
        norms = np.linalg.norm(embedding, axis=1, keepdims=True)
        embedding = np.divide(embedding, norms, out=np.zeros_like(embedding), where=norms > 0)
    return embedding


def farthest_point_centers(points, K, rng):
    """Greedy seeding: a random first center, then repeatedly the point farthest from all chosen centers"""
    chosen = [int(rng.integers(points.shape[0]))]
    distance = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        nxt = int(np.argmax(distance))
        chosen.append(nxt)
        distance = np.minimum(distance, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def kmeans_best_of(points, K, restarts, iters, seed):
    """Lloyd's k-means from farthest-point seeds, best of `restarts` by within-cluster sum of squares"""
    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        centers = farthest_point_centers(points, K, seed.spawn(r).rng())
        model = KMeans(n_clusters=K, init=centers, n_init=1, max_iter=iters, algorithm="lloyd", random_state=0)
        with warnings.catch_warnings():
            # duplicate seeds are expected for degenerate embeddings
            warnings.simplefilter("ignore", ConvergenceWarning)
            model.fit(points)
        if model.inertia_ < best_inertia:
            best_labels, best_inertia = model.labels_, model.inertia_
    return np.asarray(best_labels, dtype=np.int64)


def spectral_cluster(A, cfg: SpectralConfig):
    """Cluster the vertices of a symmetric nonnegative affinity into cfg.K groups"""
    A = np.array(A.values if isinstance(A, CoAssociationMatrix) else A, dtype=np.float64)
    N = A.shape[0]
    if cfg.K > N:
        raise TooManyClustersError(f"Cannot form K={cfg.K} clusters from N={N} points")
    if np.any(A < 0):
        raise ValueError("Affinity must be nonnegative")
    np.fill_diagonal(A, 0.0)
    if cfg.K == 1:
        return np.zeros(N, dtype=np.int64)
    embedding = spectral_embedding(A, cfg.K, cfg.normalized)
    return kmeans_best_of(embedding, cfg.K, cfg.kmeans_restarts, cfg.kmeans_iters, cfg.seed)


def connected_components(A, tol=0.0):
    """Components of the graph with an edge wherever A_ij > tol.

    :return: (component labels, number of components)
    """
    A = np.asarray(A.values if isinstance(A, CoAssociationMatrix) else A, dtype=np.float64)
    graph = scipy.sparse.csr_matrix(A > tol)
    count, labels = scipy.sparse.csgraph.connected_components(graph, directed=False)
    return labels.astype(np.int64), int(count)
