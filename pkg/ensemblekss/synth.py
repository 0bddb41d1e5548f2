"""Synthetic union-of-subspaces problem instances.

Points are drawn uniformly from the unit sphere of their subspace, then optionally
corrupted by Gaussian noise N(0, sigma^2/D I_D) and by zeroed (unobserved) entries.
"""
import logging

import numpy as np

from ensemblekss import geometry
from ensemblekss.geometry import InvalidDimensionError
from ensemblekss.model import AngleSpec, ProblemInstance, SeedSpec

logger = logging.getLogger(__name__)


class ConstructionInfeasibleError(ValueError):
    pass


def _seed_echo(seed):
    if isinstance(seed, SeedSpec):
        return {"master_seed": seed.master_seed, "stream_id": seed.stream_id, "parents": list(seed.parents)}
    return {"master_seed": int(seed), "stream_id": 0, "parents": []}


def _as_seedspec(seed):
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def _per_subspace(value, K, name):
    if np.isscalar(value):
        return [int(value)] * K
    value = [int(v) for v in value]
    if len(value) != K:
        raise ValueError(f"Expected {K} values for {name}, got {len(value)}")
    return value


def draw_points(bases, counts, sigma, seed: SeedSpec):
    """Sample unit-sphere coefficients in each basis and add isotropic noise.

    Returns the D x N data matrix and the labels; points of subspace k occupy a
    contiguous block of columns.
    """
    if sigma < 0:
        raise ValueError(f"Noise level must be nonnegative, got {sigma}")
    D = bases[0].shape[0]
    coef_rng = seed.spawn(0).rng()
    columns = []
    for basis, count in zip(bases, counts):
        if count < 1:
            raise ValueError(f"Every subspace needs at least one point, got {count}")
        coefficients = coef_rng.standard_normal((basis.shape[1], count))
        coefficients /= np.linalg.norm(coefficients, axis=0)
        columns.append(basis @ coefficients)
    data = np.hstack(columns)
    labels = np.repeat(np.arange(len(bases), dtype=np.int64), counts)
    if sigma > 0:
        noise_rng = seed.spawn(1).rng()
        data = data + (sigma / np.sqrt(D)) * noise_rng.standard_normal(data.shape)
    return data, labels


def gen_random_uos(D, K, dims, counts, sigma=0.0, seed=0):
    """K independent uniformly random subspaces with points on their unit spheres.

    :param dims: a single dimension shared by all subspaces or one per subspace
    :param counts: points per subspace, scalar or list
    :param sigma: noise level; each noise vector is N(0, sigma^2/D I_D)
    """
    seed = _as_seedspec(seed)
    dims = _per_subspace(dims, K, "dims")
    counts = _per_subspace(counts, K, "counts")
    for d in dims:
        if d < 1 or d > D:
            raise InvalidDimensionError(f"Subspace dimension must satisfy 1 <= d <= D, got d={d}, D={D}")

    basis_seed = seed.spawn(0)
    bases = [geometry.sample_stiefel(D, d, basis_seed.spawn(k)) for k, d in enumerate(dims)]
    data, labels = draw_points(bases, counts, sigma, seed.spawn(1))
    logger.debug("Generated random union of %d subspaces in R^%d, N=%d", K, D, data.shape[1])
    return ProblemInstance(
        data=data,
        true_labels=labels,
        true_bases=bases,
        noise_sigma=float(sigma),
        generator_config={
            "generator": "random_uos", "D": D, "K": K, "dims": dims, "counts": counts,
            "sigma": float(sigma), "seed": _seed_echo(seed),
        },
    )


def angled_bases(D, d, theta, seed: SeedSpec):
    """Three d-dimensional bases where S1-S2 and S1-S3 have all principal angles equal to theta.

    Uses mutually orthogonal blocks W0, W1, W2 and rotates W0 towards W1 and W2.
    """
    if d < 1:
        raise InvalidDimensionError(f"Subspace dimension must be positive, got {d}")
    if D < 3 * d:
        raise ConstructionInfeasibleError(f"Need D >= 3d to build angled subspaces, got D={D}, d={d}")
    if not 0 < theta <= np.pi / 2:
        raise ValueError(f"theta must lie in (0, pi/2], got {theta}")
    W = geometry.sample_stiefel(D, 3 * d, seed)
    W0, W1, W2 = W[:, :d], W[:, d:2 * d], W[:, 2 * d:]
    bases = [W0, np.cos(theta) * W0 + np.sin(theta) * W1, np.cos(theta) * W0 + np.sin(theta) * W2]

    for other in bases[1:]:
        cosines = np.linalg.svd(bases[0].T @ other, compute_uv=False)
        if np.max(np.abs(cosines - np.cos(theta))) > 1e-9:
            raise ConstructionInfeasibleError("Constructed subspaces do not realise the requested principal angles")
    return bases


def gen_angled_uos(D, d, theta, counts, sigma=0.0, seed=0):
    """Three subspaces with controlled principal angles between S1 and each of S2, S3"""
    if isinstance(theta, AngleSpec):
        d = theta.shared_dim
        theta = theta.theta
    seed = _as_seedspec(seed)
    counts = _per_subspace(counts, 3, "counts")
    bases = angled_bases(D, d, float(theta), seed.spawn(0))
    data, labels = draw_points(bases, counts, sigma, seed.spawn(1))
    return ProblemInstance(
        data=data,
        true_labels=labels,
        true_bases=bases,
        noise_sigma=float(sigma),
        generator_config={
            "generator": "angled_uos", "D": D, "K": 3, "dims": [d] * 3, "theta": float(theta),
            "counts": counts, "sigma": float(sigma), "seed": _seed_echo(seed),
        },
    )


def apply_missing(instance: ProblemInstance, s, seed=0):
    """Zero exactly s uniformly chosen coordinates of every point, recording them in missing_mask"""
    D, N = instance.data.shape
    if s < 0 or s >= D:
        raise InvalidDimensionError(f"Number of unobserved entries must satisfy 0 <= s < D, got s={s}, D={D}")
    seed = _as_seedspec(seed)
    rng = seed.rng()
    data = instance.data.copy()
    mask = []
    for j in range(N):
        unobserved = np.sort(rng.choice(D, size=s, replace=False)) if s else np.empty(0, dtype=np.int64)
        data[unobserved, j] = 0.0
        mask.append(unobserved.astype(np.int64))
    config = dict(instance.generator_config)
    config["missing"] = {"s": int(s), "seed": _seed_echo(seed)}
    return instance.replace(data=data, missing_mask=mask, generator_config=config)
