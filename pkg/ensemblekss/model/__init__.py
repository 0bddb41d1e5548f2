import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import numpy.typing as npt

# D x N, one point per column
DataMatrix = npt.NDArray[np.float64]
# D x d with orthonormal columns
SubspaceBasis = npt.NDArray[np.float64]
# length-N integer cluster ids
Labeling = npt.NDArray[np.int64]


@dataclass(frozen=True)
class SeedSpec:
    """A named random stream.

    Streams with the same master seed but different stream ids (or different
    parents) are independent: they map onto distinct numpy SeedSequence spawn keys.
    """
    master_seed: int
    stream_id: int = 0
    parents: tuple = ()

    def seed_sequence(self):
        return np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.parents + (self.stream_id,))

    def rng(self):
        return np.random.default_rng(self.seed_sequence())

    def spawn(self, stream_id):
        return SeedSpec(self.master_seed, stream_id, self.parents + (self.stream_id,))


@dataclass(frozen=True)
class AngleSpec:
    theta: float
    shared_dim: int


@dataclass
class ProblemInstance:
    data: DataMatrix
    true_labels: Labeling
    true_bases: list
    noise_sigma: float
    missing_mask: Optional[list] = None
    generator_config: dict = field(default_factory=dict)

    @property
    def ambient_dim(self):
        return self.data.shape[0]

    @property
    def num_points(self):
        return self.data.shape[1]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class KssResult:
    labels: Labeling
    bases: list
    cost: float
    weight: float
    # cost after each alternation, index 0 is the random-initialization cost
    cost_history: list = field(default_factory=list)
    empty_events: int = 0


@dataclass
class CoAssociationMatrix:
    values: npt.NDArray[np.float64]
    weighted: bool = False
    thresholded: bool = False

    @property
    def num_points(self):
        return self.values.shape[0]


@dataclass
class SpectralConfig:
    K: int
    kmeans_restarts: int = 20
    kmeans_iters: int = 100
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))
    normalized: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if self.kmeans_restarts < 1:
            raise ValueError(f"kmeans_restarts must be at least 1, got {self.kmeans_restarts}")


@dataclass
class MetricReport:
    clustering_error_pct: float
    nfc: Optional[bool] = None
    num_components: Optional[int] = None
    phi_q: Optional[float] = None
    pairwise_aff: Optional[list] = None
    violating_edges: list = field(default_factory=list)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class FEstimate:
    """Monte-Carlo estimate of the co-cluster probability, with binomial standard error."""
    probability: object
    stderr: object
    samples: int
