import logging

import numpy as np
from joblib import Parallel, delayed

from ensemblekss import geometry
from ensemblekss.kss import DEFAULT_ITERATIONS, run_kss
from ensemblekss.model import CoAssociationMatrix, SeedSpec, SpectralConfig
from ensemblekss.spectral import spectral_cluster

logger = logging.getLogger(__name__)

# stream id of the spectral step, kept away from the base clustering streams 0..B-1
SPECTRAL_STREAM = 2 ** 32
# labelings folded into one matrix product during accumulation
ACCUMULATE_CHUNK = 256
# base clusterings handed to a worker at a time
ENSEMBLE_BATCH = 64


class ThresholdRangeError(ValueError):
    pass


def _as_seedspec(seed):
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def _values(A):
    return A.values if isinstance(A, CoAssociationMatrix) else np.asarray(A, dtype=np.float64)


def _one_hot(labels):
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    onehot = np.zeros((labels.shape[0], inverse.max() + 1))
    onehot[np.arange(labels.shape[0]), inverse] = 1.0
    return onehot


def accumulate(labelings, weights=None):
    """Co-association matrix A_ij = (1/B) sum_b w(b) 1{labels_b(i) = labels_b(j)}.

    Labelings are reduced in order of b, so the result does not depend on how they
    were produced.
    """
    labelings = [np.asarray(labels) for labels in labelings]
    B = len(labelings)
    if B == 0:
        raise ValueError("Need at least one labeling")
    N = labelings[0].shape[0]
    for b, labels in enumerate(labelings):
        if labels.shape != (N,):
            raise ValueError(f"Labeling {b} has shape {labels.shape}, expected ({N},)")
    if weights is None:
        w = np.ones(B)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (B,):
            raise ValueError(f"Expected {B} weights, got shape {w.shape}")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("Weights must lie in [0, 1]")

    A = np.zeros((N, N))
    for start in range(0, B, ACCUMULATE_CHUNK):
        onehots = [_one_hot(labels) for labels in labelings[start:start + ACCUMULATE_CHUNK]]
        H = np.hstack(onehots)
        Hw = np.hstack([onehot * w[start + i] for i, onehot in enumerate(onehots)])
        A += Hw @ H.T
    A /= B
    A = (A + A.T) / 2
    return CoAssociationMatrix(values=A, weighted=weights is not None)


def thresh(A, q):
    """Keep the q largest entries of every row and of every column, then average the two.

    The diagonal is zeroed first; ties at the q-th value keep the lower index.
    """
    values = np.array(_values(A), dtype=np.float64)
    N = values.shape[0]
    if not 1 <= q <= N:
        raise ThresholdRangeError(f"q must satisfy 1 <= q <= N={N}, got {q}")
    np.fill_diagonal(values, 0.0)

    row_keep = np.argsort(-values, axis=1, kind="stable")[:, :q]
    z_row = np.zeros_like(values)
    np.put_along_axis(z_row, row_keep, np.take_along_axis(values, row_keep, axis=1), axis=1)

    col_keep = np.argsort(-values, axis=0, kind="stable")[:q, :]
    z_col = np.zeros_like(values)
    np.put_along_axis(z_col, col_keep, np.take_along_axis(values, col_keep, axis=0), axis=0)

    weighted = A.weighted if isinstance(A, CoAssociationMatrix) else True
    return CoAssociationMatrix(values=(z_row + z_col) / 2, weighted=weighted, thresholded=True)


def zero_diagonal(A):
    values = np.array(_values(A), dtype=np.float64)
    np.fill_diagonal(values, 0.0)
    return values


def clustered_graph(A, q=None):
    """The graph handed to spectral clustering: Thresh(A, q), or A with a zero diagonal when q is None.

    A matrix that is already thresholded is only stripped of its diagonal.
    """
    if q is None or (isinstance(A, CoAssociationMatrix) and A.thresholded):
        return zero_diagonal(A)
    return thresh(A, q).values


def _base_batch(data, Kbar, dbar, T, seeds, empty_policy):
    results = []
    for seed in seeds:
        result = run_kss(data, Kbar, dbar, T, seed, empty_policy)
        results.append((result.labels, result.weight))
    return results


def base_clusterings(data, Kbar, dbar, B, T, seed, empty_policy="redraw", n_jobs=1):
    """Run B independent KSS base clusterings on streams seed.spawn(b).

    Returns the labelings and weights in order of b.
    """
    if B < 1:
        raise ValueError(f"Need at least one base clustering, got B={B}")
    seed = _as_seedspec(seed)
    seeds = [seed.spawn(b) for b in range(B)]
    batches = [seeds[i:i + ENSEMBLE_BATCH] for i in range(0, B, ENSEMBLE_BATCH)]
    outputs = Parallel(n_jobs=n_jobs)(
        delayed(_base_batch)(data, Kbar, dbar, T, batch, empty_policy) for batch in batches
    )
    labelings, weights = [], []
    for batch in outputs:
        for labels, weight in batch:
            labelings.append(labels)
            weights.append(weight)
    return labelings, np.clip(np.array(weights), 0.0, 1.0)


def ekss_affinity(data, Kbar, dbar, B, T=DEFAULT_ITERATIONS, seed=0, weighted=False, empty_policy="redraw",
                  n_jobs=1):
    """The co-association matrix of B KSS base clusterings (weighted by KSS quality if requested)"""
    data = geometry.check_data(data)
    labelings, weights = base_clusterings(data, Kbar, dbar, B, T, seed, empty_policy, n_jobs)
    return accumulate(labelings, weights if weighted else None)


def ekss(data, Kbar, dbar, K, q, B, T=DEFAULT_ITERATIONS, seed=0, weighted=False, empty_policy="redraw",
         n_jobs=1, kmeans_restarts=20):
    """Ensemble K-subspaces.

    :param q: neighbours kept by Thresh, or None to cluster the unthresholded matrix
    :return: the final labels and the (unthresholded) co-association matrix
    """
    seed = _as_seedspec(seed)
    logger.info("Running EKSS with B=%d, T=%d, Kbar=%d, dbar=%d", B, T, Kbar, dbar)
    A = ekss_affinity(data, Kbar, dbar, B, T, seed, weighted, empty_policy, n_jobs)
    graph = clustered_graph(A, q)
    cfg = SpectralConfig(K=K, kmeans_restarts=kmeans_restarts, seed=seed.spawn(SPECTRAL_STREAM))
    labels = spectral_cluster(graph, cfg)
    return labels, A


def ekss0(data, Kbar, dbar, K, q, B, seed=0, n_jobs=1, kmeans_restarts=20):
    """EKSS with no KSS iterations and unweighted voting"""
    return ekss(data, Kbar, dbar, K, q, B, T=0, seed=seed, weighted=False, n_jobs=n_jobs,
                kmeans_restarts=kmeans_restarts)


def tsc_affinity(data, q, weights="angle"):
    """Thresholded subspace clustering affinity.

    :param weights: "angle" for exp(-2 arccos |<x_i, x_j>|), "abs" for the raw absolute inner products
    """
    data = geometry.check_data(data)
    N = data.shape[1]
    if not 1 <= q < N:
        raise ThresholdRangeError(f"q must satisfy 1 <= q < N={N}, got {q}")
    inner = np.minimum(1.0, np.abs(data.T @ data))
    if weights == "angle":
        Z = np.exp(-2.0 * np.arccos(inner))
    elif weights == "abs":
        Z = inner
    else:
        raise ValueError(f"weights must be 'angle' or 'abs', got {weights!r}")
    np.fill_diagonal(Z, 0.0)
    return thresh(CoAssociationMatrix(values=Z, weighted=True), q)


def tsc(data, K, q, seed=0, weights="angle", kmeans_restarts=20):
    """TSC baseline: normalize points, threshold the angle affinity, spectral clustering"""
    seed = _as_seedspec(seed)
    A = tsc_affinity(geometry.normalize_columns(data), q, weights)
    cfg = SpectralConfig(K=K, kmeans_restarts=kmeans_restarts, seed=seed.spawn(SPECTRAL_STREAM))
    return spectral_cluster(A.values, cfg), A
