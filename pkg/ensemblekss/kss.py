import logging

import numpy as np

from ensemblekss import geometry
from ensemblekss.geometry import DataValidationError, DimensionMismatchError, InvalidDimensionError
from ensemblekss.model import KssResult, SeedSpec

logger = logging.getLogger(__name__)

EMPTY_POLICIES = ("redraw", "steal")
DEFAULT_ITERATIONS = 3


def _as_seedspec(seed):
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def projection_energies(data, bases):
    """K x N matrix of ||U_k^T x_j||_2"""
    data = np.asarray(data, dtype=np.float64)
    energies = np.empty((len(bases), data.shape[1]))
    for k, basis in enumerate(bases):
        if basis.shape[0] != data.shape[0]:
            raise DimensionMismatchError(f"Basis {k} has D={basis.shape[0]} but data has D={data.shape[0]}")
        energies[k] = np.linalg.norm(basis.T @ data, axis=0)
    return energies


def assign_by_projection(data, bases):
    """Assign every point to the basis capturing most of its energy, ties to the lowest index."""
    if len(bases) < 1:
        raise ValueError("Need at least one candidate basis")
    return np.argmax(projection_energies(data, bases), axis=0).astype(np.int64)


def kss_cost(data, labels, bases):
    """Sum over clusters of the squared residuals of points to their assigned subspace"""
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != data.shape[1]:
        raise DimensionMismatchError(f"Got {labels.shape[0]} labels for {data.shape[1]} points")
    cost = 0.0
    for k, basis in enumerate(bases):
        if basis.shape[0] != data.shape[0]:
            raise DimensionMismatchError(f"Basis {k} has D={basis.shape[0]} but data has D={data.shape[0]}")
        members = data[:, labels == k]
        if members.shape[1] == 0:
            continue
        residual = members - basis @ (basis.T @ members)
        cost += float(np.sum(residual ** 2))
    return cost


def kss_weight(data, result):
    """Quality weight 1 - cost / ||X||_F^2 of a base clustering.

    :param result: a KssResult or a precomputed cost
    """
    cost = result.cost if isinstance(result, KssResult) else float(result)
    frobenius = float(np.sum(np.asarray(data, dtype=np.float64) ** 2))
    if frobenius == 0:
        raise DataValidationError("Cannot weight a clustering of an all-zero data matrix")
    return 1.0 - cost / frobenius


def _steal_farthest(data, labels, bases, empty):
    """Move the worst-fit point of a cluster with more than one member into cluster `empty`"""
    sizes = np.bincount(labels, minlength=len(bases))
    energy = np.sum(data ** 2, axis=0) - projection_energies(data, bases)[labels, np.arange(data.shape[1])] ** 2
    energy[sizes[labels] <= 1] = -np.inf
    if not np.isfinite(energy).any():
        return False
    labels[int(np.argmax(energy))] = empty
    return True


def update_bases(data, labels, bases, dbar, rng, empty_policy="redraw"):
    """Refit every candidate by PCA on its cluster, handling empty clusters by policy.

    Returns the new bases, the (possibly changed) labels and the number of empty-cluster events.
    """
    labels = labels.copy()
    D = data.shape[0]
    events = 0
    for k in range(len(bases)):
        if np.any(labels == k):
            continue
        events += 1
        if empty_policy == "steal" and _steal_farthest(data, labels, bases, k):
            logger.debug("Cluster %d empty, stole its farthest point", k)
        else:
            logger.debug("Cluster %d empty, drawing a fresh random basis", k)

    new_bases = []
    for k in range(len(bases)):
        members = data[:, labels == k]
        if members.shape[1] == 0:
            new_bases.append(geometry.sample_stiefel(D, dbar, rng))
        else:
            new_bases.append(geometry.pca_basis(members, dbar, rng))
    return new_bases, labels, events


def run_kss(data, Kbar, dbar, T=DEFAULT_ITERATIONS, seed=0, empty_policy="redraw"):
    """One K-subspaces base clustering from a random initialization.

    Candidate k starts from sample_stiefel(D, dbar, seed.spawn(k)); re-draws and PCA
    rank completion use the stream seed.spawn(Kbar). T=0 returns the assignment to the
    random candidates.
    """
    data = geometry.check_data(data)
    D = data.shape[0]
    if Kbar < 1:
        raise ValueError(f"Need at least one candidate subspace, got Kbar={Kbar}")
    if dbar < 1 or dbar > D:
        raise InvalidDimensionError(f"Candidate dimension must satisfy 1 <= dbar <= D, got dbar={dbar}, D={D}")
    if T < 0:
        raise ValueError(f"Number of iterations must be nonnegative, got T={T}")
    if empty_policy not in EMPTY_POLICIES:
        raise ValueError(f"empty_policy must be one of {EMPTY_POLICIES}, got {empty_policy!r}")
    seed = _as_seedspec(seed)

    bases = [geometry.sample_stiefel(D, dbar, seed.spawn(k)) for k in range(Kbar)]
    aux_rng = seed.spawn(Kbar).rng()
    labels = assign_by_projection(data, bases)
    history = [kss_cost(data, labels, bases)]
    empty_events = 0
    for _ in range(T):
        bases, labels, events = update_bases(data, labels, bases, dbar, aux_rng, empty_policy)
        empty_events += events
        labels = assign_by_projection(data, bases)
        history.append(kss_cost(data, labels, bases))

    cost = history[-1]
    frobenius = float(np.sum(data ** 2))
    weight = kss_weight(data, cost) if frobenius > 0 else 1.0
    return KssResult(labels=labels, bases=bases, cost=cost, weight=weight,
                     cost_history=history, empty_events=empty_events)


def kss_cluster(data, K, dbar, T=DEFAULT_ITERATIONS, restarts=10, seed=0, empty_policy="redraw"):
    """KSS as a stand-alone clusterer: the lowest-cost result over `restarts` random initializations"""
    if restarts < 1:
        raise ValueError(f"Need at least one restart, got {restarts}")
    seed = _as_seedspec(seed)
    best = None
    for r in range(restarts):
        result = run_kss(data, K, dbar, T, seed.spawn(r), empty_policy)
        if best is None or result.cost < best.cost:
            best = result
    return best
