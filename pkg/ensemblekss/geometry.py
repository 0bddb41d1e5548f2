import logging

import numpy as np
import scipy.linalg

from ensemblekss.model import SeedSpec

logger = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-9


class InvalidDimensionError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class EmptyPointSetError(ValueError):
    pass


class DataValidationError(ValueError):
    pass


def as_rng(seed):
    """Accept a SeedSpec, an existing Generator or a plain integer"""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.rng()
    return SeedSpec(int(seed)).rng()


def check_data(data):
    """Validate a D x N data matrix and return it as float64."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DataValidationError(f"Data must be a 2-d matrix, got {data.ndim} dimensions")
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise DataValidationError(f"Data must have D >= 1 and N >= 1, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DataValidationError("Data contains non-finite entries")
    return data


def check_basis(basis, tol=ORTHONORMAL_TOL):
    basis = np.asarray(basis, dtype=np.float64)
    if basis.ndim != 2 or basis.shape[1] < 1 or basis.shape[1] > basis.shape[0]:
        raise InvalidDimensionError(f"A basis must be D x d with 1 <= d <= D, got shape {basis.shape}")
    gram = basis.T @ basis
    if np.max(np.abs(gram - np.eye(basis.shape[1]))) > tol:
        raise DataValidationError("Basis columns are not orthonormal")
    return basis


def normalize_columns(data):
    """Scale every column to unit Euclidean norm. Columns that are exactly zero are rejected."""
    data = check_data(data)
    norms = np.linalg.norm(data, axis=0)
    if np.any(norms == 0):
        zero_cols = np.flatnonzero(norms == 0).tolist()
        raise DataValidationError(f"Cannot normalize zero columns: {zero_cols}")
    return data / norms


def sign_fix(vectors):
    """Flip each column so that its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=np.float64)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _orthonormalize(gaussian):
    # Haar measure needs the diagonal of R forced positive
    q, r = np.linalg.qr(gaussian)
    diag = np.sign(np.diagonal(r, axis1=-2, axis2=-1)).copy()
    diag[diag == 0] = 1.0
    return q * diag[..., np.newaxis, :]


def sample_stiefel(D, dbar, seed):
    """Draw a D x dbar matrix uniformly from the Stiefel manifold.

    :param D: ambient dimension
    :param dbar: number of orthonormal columns, 1 <= dbar <= D
    :param seed: a SeedSpec (or Generator); identical seeds give identical bases
    """
    if dbar < 1 or dbar > D:
        raise InvalidDimensionError(f"Candidate dimension must satisfy 1 <= dbar <= D, got dbar={dbar}, D={D}")
    rng = as_rng(seed)
    return _orthonormalize(rng.standard_normal((D, dbar)))


def sample_stiefel_batch(count, D, dbar, rng):
    """Draw `count` independent Stiefel samples at once, shape (count, D, dbar)."""
    if dbar < 1 or dbar > D:
        raise InvalidDimensionError(f"Candidate dimension must satisfy 1 <= dbar <= D, got dbar={dbar}, D={D}")
    return _orthonormalize(rng.standard_normal((count, D, dbar)))


def projection_energy(x, basis):
    """Return ||U^T x||_2 for a point (length D) or every column of a D x N matrix."""
    x = np.asarray(x, dtype=np.float64)
    basis = np.asarray(basis, dtype=np.float64)
    if x.shape[0] != basis.shape[0]:
        raise DimensionMismatchError(f"Point has length {x.shape[0]} but basis has D={basis.shape[0]}")
    return np.linalg.norm(basis.T @ x, axis=0)


def complete_basis(partial, dbar, rng):
    """Extend orthonormal columns `partial` (D x r) to dbar columns with random orthogonal directions."""
    D, r = partial.shape
    missing = dbar - r
    if missing <= 0:
        return partial[:, :dbar]
    extra = rng.standard_normal((D, missing))
    # project twice, one pass loses orthogonality for nearly dependent draws
    for _ in range(2):
        extra -= partial @ (partial.T @ extra)
    extra = _orthonormalize(extra)
    return np.hstack([partial, extra])


def pca_basis(points, dbar, seed=None):
    """Top-dbar left singular vectors of an uncentered point matrix.

    If the points span fewer than dbar directions, the basis is completed with
    random orthonormal directions orthogonal to their span, drawn from `seed`.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, np.newaxis]
    D = points.shape[0]
    if dbar < 1 or dbar > D:
        raise InvalidDimensionError(f"PCA dimension must satisfy 1 <= dbar <= D, got dbar={dbar}, D={D}")
    if points.shape[1] == 0:
        raise EmptyPointSetError("Cannot estimate a subspace from an empty set of points")

    left, singular_values, _ = scipy.linalg.svd(points, full_matrices=False)
    if singular_values.size and singular_values[0] > 0:
        tol = max(points.shape) * np.finfo(np.float64).eps * singular_values[0]
        rank = int(np.sum(singular_values > tol))
    else:
        rank = 0
    keep = min(rank, dbar)
    basis = sign_fix(left[:, :keep])
    if keep < dbar:
        logger.debug("PCA slice has rank %d < %d, completing basis", rank, dbar)
        rng = as_rng(seed if seed is not None else 0)
        basis = complete_basis(basis, dbar, rng)
    return basis
