import itertools
import logging
import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics.cluster import contingency_matrix

from ensemblekss import geometry
from ensemblekss.geometry import DimensionMismatchError
from ensemblekss.model import CoAssociationMatrix, FEstimate, MetricReport
from ensemblekss.spectral import connected_components

logger = logging.getLogger(__name__)

MASK_BUDGET = 10 ** 6
# matrix entries drawn per Monte-Carlo chunk
ESTIMATE_CHUNK_ENTRIES = 2_000_000


class EnumerationBudgetError(ValueError):
    pass


class NotOrthonormalError(ValueError):
    pass


def clustering_error(out, truth):
    """Percentage of points misclassified under the best matching of output to true labels"""
    out = np.asarray(out)
    truth = np.asarray(truth)
    if out.shape != truth.shape:
        raise DimensionMismatchError(f"Labelings have different lengths: {out.shape[0]} and {truth.shape[0]}")
    if out.size == 0:
        return 0.0
    counts = contingency_matrix(truth, out)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    matched = counts[rows, cols].sum()
    return 100.0 * (truth.size - matched) / truth.size


def nfc_check(A, truth):
    """Check for no false connections.

    :return: (True if every nonzero entry joins points with the same true label, list of violating (i, j) with i < j)
    """
    values = A.values if isinstance(A, CoAssociationMatrix) else np.asarray(A, dtype=np.float64)
    truth = np.asarray(truth)
    if values.shape != (truth.size, truth.size):
        raise DimensionMismatchError(f"Affinity of shape {values.shape} does not match {truth.size} labels")
    connected = (values != 0) | (values.T != 0)
    i, j = np.nonzero(np.triu(connected, k=1) & (truth[:, np.newaxis] != truth[np.newaxis, :]))
    violations = [(int(a), int(b)) for a, b in zip(i, j)]
    return not violations, violations


def angular_separation(data, truth, q, f=None):
    """q-angular separation of labelled points with respect to an increasing map f (identity by default).

    For every point, half the gap between f of its q-th largest absolute inner product
    with other points of its cluster and f of its largest absolute inner product with
    points of other clusters; the minimum over points is returned.
    """
    data = geometry.check_data(data)
    truth = np.asarray(truth)
    f = f if f is not None else (lambda v: v)
    clusters = np.unique(truth)
    if clusters.size < 2:
        raise ValueError("Angular separation needs at least two clusters")
    if q < 1:
        raise ValueError(f"q must be positive, got {q}")
    smallest = min(int(np.sum(truth == c)) for c in clusters)
    if q >= smallest:
        raise ValueError(f"q must be smaller than the smallest cluster ({smallest} points), got {q}")

    inner = np.abs(data.T @ data)
    phi = np.inf
    for c in clusters:
        members = np.flatnonzero(truth == c)
        others = np.flatnonzero(truth != c)
        within = inner[np.ix_(members, members)]
        np.fill_diagonal(within, -np.inf)
        qth = -np.sort(-within, axis=1)[:, q - 1]
        cross = inner[np.ix_(members, others)].max(axis=1)
        gaps = (np.asarray(f(qth)) - np.asarray(f(cross))) / 2
        phi = min(phi, float(gaps.min()))
    return phi


def _check_orthonormal(basis):
    try:
        return geometry.check_basis(basis)
    except ValueError as e:
        raise NotOrthonormalError(str(e)) from e


def subspace_affinity(U_k, U_l):
    """||U_k^T U_l||_F / sqrt(min(d_k, d_l)): 1 for equal subspaces, 0 for orthogonal ones"""
    U_k = _check_orthonormal(U_k)
    U_l = _check_orthonormal(U_l)
    if U_k.shape[0] != U_l.shape[0]:
        raise DimensionMismatchError(f"Bases live in R^{U_k.shape[0]} and R^{U_l.shape[0]}")
    return float(np.linalg.norm(U_k.T @ U_l, "fro") / np.sqrt(min(U_k.shape[1], U_l.shape[1])))


def pairwise_affinities(bases):
    K = len(bases)
    aff = np.eye(K)
    for k, l in itertools.combinations(range(K), 2):
        aff[k, l] = aff[l, k] = subspace_affinity(bases[k], bases[l])
    return aff


def masked_ratio(bases, s, budget=MASK_BUDGET):
    """Worst cross-subspace coherence over all row masks of size <= 2s, relative to the worst self-coherence.

    Every index set is enumerated; the number of sets must not exceed `budget`.
    """
    if len(bases) < 2:
        raise ValueError("Need at least two bases")
    bases = [np.asarray(b, dtype=np.float64) for b in bases]
    D = bases[0].shape[0]
    if any(b.shape[0] != D for b in bases):
        raise DimensionMismatchError("All bases must share the ambient dimension")
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    largest = min(2 * s, D)
    total = sum(math.comb(D, m) for m in range(largest + 1))
    if total > budget:
        raise EnumerationBudgetError(
            f"Enumerating {total} index sets exceeds the budget of {budget}; use a smaller s or D"
        )

    grams = {(k, l): bases[k].T @ bases[l] for k in range(len(bases)) for l in range(len(bases))}
    numerator, denominator = 0.0, np.inf
    for size in range(largest + 1):
        for masked in itertools.combinations(range(D), size):
            rows = list(masked)
            for (k, l), gram in grams.items():
                product = gram - bases[k][rows].T @ bases[l][rows] if rows else gram
                if k != l:
                    numerator = max(numerator, float(np.linalg.norm(product, 2)))
                else:
                    denominator = min(denominator, float(np.linalg.svd(product, compute_uv=False)[-1]))
    if denominator == 0:
        return np.inf
    return numerator / denominator


def estimate_f(theta, Kbar, dbar, D, B, seed=0):
    """Monte-Carlo co-cluster probability of two unit points at angle theta under EKSS-0 candidates.

    The points sit at e_1 and cos(theta) e_1 + sin(theta) e_2; each of the B samples
    draws Kbar uniform candidates and checks whether both points pick the same one.
    An array of angles is evaluated on one shared set of draws.
    """
    thetas = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if np.any(thetas < 0) or np.any(thetas > np.pi / 2 + 1e-12):
        raise ValueError("theta must lie in [0, pi/2]")
    if B < 1:
        raise ValueError(f"Need at least one sample, got B={B}")
    if D < 2:
        raise geometry.InvalidDimensionError(f"Need D >= 2 to place two points at an angle, got D={D}")
    rng = geometry.as_rng(seed)
    cos, sin = np.cos(thetas), np.sin(thetas)

    hits = np.zeros(thetas.size, dtype=np.int64)
    chunk = max(1, ESTIMATE_CHUNK_ENTRIES // (Kbar * D * dbar))
    remaining = B
    while remaining > 0:
        n = min(chunk, remaining)
        candidates = geometry.sample_stiefel_batch(n * Kbar, D, dbar, rng).reshape(n, Kbar, D, dbar)
        first, second = candidates[:, :, 0, :], candidates[:, :, 1, :]
        choice_i = np.argmax(np.linalg.norm(first, axis=-1), axis=1)
        for t in range(thetas.size):
            energy_j = np.linalg.norm(cos[t] * first + sin[t] * second, axis=-1)
            hits[t] += int(np.sum(choice_i == np.argmax(energy_j, axis=1)))
        remaining -= n

    probability = hits / B
    stderr = np.sqrt(probability * (1 - probability) / B)
    if np.ndim(theta) == 0:
        return FEstimate(probability=float(probability[0]), stderr=float(stderr[0]), samples=B)
    return FEstimate(probability=probability, stderr=stderr, samples=B)


def metric_report(out, truth, A=None, data=None, q=None, bases=None, tol=0.0):
    """Collect every metric the inputs allow into a MetricReport"""
    report = MetricReport(clustering_error_pct=clustering_error(out, truth))
    if A is not None:
        report.nfc, report.violating_edges = nfc_check(A, truth)
        _, report.num_components = connected_components(A, tol)
    if data is not None and q is not None:
        report.phi_q = angular_separation(data, truth, q)
    if bases is not None:
        report.pairwise_aff = pairwise_affinities(bases).tolist()
    return report
