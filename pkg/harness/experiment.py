import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from ensemblekss import affinity, kss, synth
from ensemblekss.backend import TRIAL_COLUMNS
from ensemblekss.evaluation import clustering_error
from ensemblekss.model import SeedSpec

logger = logging.getLogger(__name__)

MODES = ("fig1_progression", "grid_Nk_by_d", "grid_Nk_by_theta", "noisy_theta_sweep", "theory_suite")
ALGORITHMS = ("ekss", "ekss0", "tsc", "kss")
# fixed per-algorithm streams so that the algorithm subset does not change the draws
ALGORITHM_STREAMS = {"ekss": 1, "ekss0": 2, "tsc": 3, "kss": 4}
SPACINGS = ("log", "linear")
GRID_POINTS = 8
THETA_POINTS = 20
NOISY_SIGMA = math.sqrt(0.05)


class ExperimentConfigError(ValueError):
    pass


def make_grid(low, high, points=GRID_POINTS, spacing="log", integer=False):
    if spacing == "log":
        grid = np.geomspace(low, high, points)
    elif spacing == "linear":
        grid = np.linspace(low, high, points)
    else:
        raise ExperimentConfigError(f"spacing must be one of {SPACINGS}, got {spacing!r}")
    if integer:
        return sorted({int(round(v)) for v in grid})
    return [float(v) for v in grid]


def threshold_rule(algorithm, Nk):
    """Neighbours kept per point: max(3, ceil(N_k/6)) for EKSS, max(3, ceil(N_k/20)) otherwise"""
    if algorithm == "ekss":
        return max(3, math.ceil(Nk / 6))
    return max(3, math.ceil(Nk / 20))


@dataclass
class ExperimentConfig:
    mode: str
    Nk: Optional[list] = None
    d: Optional[list] = None
    theta: Optional[list] = None
    sigma: Optional[list] = None
    algorithms: Optional[list] = None
    trials: int = 1
    seed: int = 0
    output_dir: str = "results"
    D: int = 100
    K: Optional[int] = None
    B: Optional[int] = None
    B_list: list = field(default_factory=lambda: [1, 5, 50])
    T: int = kss.DEFAULT_ITERATIONS
    weighted: bool = False
    spacing: str = "log"
    kss_restarts: int = 10
    n_jobs: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ExperimentConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.trials < 1:
            raise ExperimentConfigError(f"trials must be at least 1, got {self.trials}")
        if self.mode == "fig1_progression" and not self.B_list:
            raise ExperimentConfigError("B_list must be nonempty")
        self._fill_defaults()
        if self.mode == "theory_suite":
            return
        for name in ("Nk", "d", "sigma", "algorithms"):
            if not getattr(self, name):
                raise ExperimentConfigError(f"Parameter grid {name!r} must be nonempty")
        if self.mode in ("grid_Nk_by_theta", "noisy_theta_sweep") and not self.theta:
            raise ExperimentConfigError("Parameter grid 'theta' must be nonempty")
        if self.mode in ("grid_Nk_by_theta", "noisy_theta_sweep") and self.K != 3:
            raise ExperimentConfigError(f"Angled subspace experiments use K=3, got K={self.K}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ExperimentConfigError(f"Unknown algorithms: {sorted(unknown)}")

    def _default(self, name, value):
        if getattr(self, name) is None:
            setattr(self, name, value)

    def _fill_defaults(self):
        if self.mode == "fig1_progression":
            self._default("K", 4)
            self._default("Nk", [100])
            self._default("d", [3])
            self._default("algorithms", ["ekss"])
            self._default("B", max(self.B_list))
        elif self.mode == "grid_Nk_by_d":
            self._default("Nk", make_grid(10, 500, spacing=self.spacing, integer=True))
            self._default("d", make_grid(1, 75, spacing=self.spacing, integer=True))
        elif self.mode == "grid_Nk_by_theta":
            self._default("Nk", make_grid(10, 500, spacing=self.spacing, integer=True))
            self._default("d", [10])
            self._default("theta", make_grid(0.001, 0.8, THETA_POINTS, self.spacing))
        elif self.mode == "noisy_theta_sweep":
            self._default("Nk", [500])
            self._default("d", [10])
            self._default("theta", make_grid(0.001, 0.08, THETA_POINTS, self.spacing))
            self._default("sigma", [NOISY_SIGMA])
        self._default("K", 3)
        self._default("B", 1000)
        self._default("sigma", [0.0])
        self._default("algorithms", ["ekss", "ekss0", "tsc"])

    @classmethod
    def from_dict(cls, values):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ExperimentConfigError(f"Unknown experiment settings: {sorted(unknown)}")
        return cls(**values)

    @classmethod
    def from_json(cls, path, defaults=None, **overrides):
        """Settings from a JSON file on top of `defaults`; overrides that are not None win"""
        with open(path) as fp:
            values = dict(defaults or {})
            values.update(json.load(fp))
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls.from_dict(values)

    def to_dict(self):
        return dataclasses.asdict(self)

    def run_id(self):
        # n_jobs and output_dir do not change results
        values = {k: v for k, v in self.to_dict().items() if k not in ("n_jobs", "output_dir")}
        return hashlib.sha1(json.dumps(values, sort_keys=True).encode()).hexdigest()[:12]

    def cells(self):
        """Grid cells in a fixed order: (d, theta, sigma, N_k) dictionaries"""
        thetas = self.theta if self.mode in ("grid_Nk_by_theta", "noisy_theta_sweep") else [None]
        cells = []
        for d in self.d:
            for theta in thetas:
                for sigma in self.sigma:
                    for Nk in self.Nk:
                        cells.append({"d": int(d), "theta": None if theta is None else float(theta),
                                      "sigma": float(sigma), "N_k": int(Nk)})
        return cells


def make_instance(cfg: ExperimentConfig, cell, seed: SeedSpec):
    if cell["theta"] is None:
        return synth.gen_random_uos(cfg.D, cfg.K, cell["d"], cell["N_k"], cell["sigma"], seed)
    return synth.gen_angled_uos(cfg.D, cell["d"], cell["theta"], cell["N_k"], cell["sigma"], seed)


def run_algorithm(algorithm, data, K, Kbar, dbar, q, B, T=kss.DEFAULT_ITERATIONS, seed=0, weighted=False,
                  n_jobs=1, kss_restarts=10):
    """Cluster `data` with one of the supported algorithms.

    :return: (labels, affinity matrix or None)
    """
    if algorithm == "ekss":
        return affinity.ekss(data, Kbar, dbar, K, q, B, T, seed, weighted=weighted, n_jobs=n_jobs)
    elif algorithm == "ekss0":
        return affinity.ekss0(data, Kbar, dbar, K, q, B, seed, n_jobs=n_jobs)
    elif algorithm == "tsc":
        labels, A = affinity.tsc(data, K, q, seed)
        return labels, A
    elif algorithm == "kss":
        result = kss.kss_cluster(data, K, dbar, T, kss_restarts, seed)
        return result.labels, None
    raise ExperimentConfigError(f"Unknown algorithm {algorithm!r}")


def _row(cfg, cell_index, cell, algorithm, trial, B, q, error):
    return {
        "mode": cfg.mode, "cell": cell_index, "algorithm": algorithm, "trial": trial,
        "D": cfg.D, "K": cfg.K, "d": cell["d"], "N_k": cell["N_k"], "theta": cell["theta"],
        "sigma": cell["sigma"], "B": B, "T": cfg.T if algorithm in ("ekss", "kss") else 0,
        "q": q, "error_pct": float(error),
    }


def run_trial(cfg: ExperimentConfig, cell_index, cell, trial):
    """One problem instance of one grid cell, clustered by every configured algorithm.

    :return: (rows, {name: co-association matrix}) where matrices are only kept for trial 0 of fig1_progression
    """
    seed = SeedSpec(cfg.seed).spawn(cell_index).spawn(trial)
    instance = make_instance(cfg, cell, seed.spawn(0))
    data, truth = instance.data, instance.true_labels
    N = data.shape[1]
    rows, matrices = [], {}

    if cfg.mode == "fig1_progression":
        for B in cfg.B_list:
            labels, A = affinity.ekss(data, cfg.K, cell["d"], cfg.K, None, B, cfg.T,
                                      seed.spawn(ALGORITHM_STREAMS["ekss"]), weighted=cfg.weighted)
            rows.append(_row(cfg, cell_index, cell, "ekss", trial, B, None, clustering_error(labels, truth)))
            if trial == 0:
                matrices[f"B{B}"] = A.values
        return rows, matrices

    for algorithm in cfg.algorithms:
        q = None if algorithm == "kss" else min(threshold_rule(algorithm, cell["N_k"]), N - 1)
        B = cfg.B if algorithm in ("ekss", "ekss0") else None
        labels, _ = run_algorithm(algorithm, data, cfg.K, cfg.K, cell["d"], q, B, cfg.T,
                                  seed.spawn(ALGORITHM_STREAMS[algorithm]), cfg.weighted,
                                  kss_restarts=cfg.kss_restarts)
        rows.append(_row(cfg, cell_index, cell, algorithm, trial, B, q, clustering_error(labels, truth)))
    return rows, matrices


def summarize(rows):
    """Mean and median error per grid cell, algorithm and ensemble size"""
    groups = {}
    for row in rows:
        key = (row["cell"], row["algorithm"], row["B"])
        groups.setdefault(key, []).append(row)
    summary = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], -1 if k[2] is None else k[2])):
        members = groups[key]
        errors = np.array([r["error_pct"] for r in members])
        first = {c: members[0][c] for c in TRIAL_COLUMNS if c not in ("trial", "error_pct")}
        first.update({
            "mean_error_pct": float(errors.mean()),
            "median_error_pct": float(np.median(errors)),
            "trials": len(members),
        })
        summary.append(first)
    return summary


def run_experiment(cfg: ExperimentConfig, backend):
    """Run every grid cell and trial, then write trials and summary through `backend`.

    :return: (trial rows, summary rows)
    """
    if not backend.is_ready():
        raise ExperimentConfigError(f"Result backend is not writable ({cfg.output_dir})")
    run_id = cfg.run_id()
    backend.save_run(run_id, cfg.mode, cfg.to_dict())

    if cfg.mode == "theory_suite":
        from harness.theory import theory_suite, report_rows
        report = theory_suite(cfg.seed)
        summary = report_rows(report)
        backend.save_summary(run_id, summary)
        return [], summary

    tasks = [(index, cell, trial) for index, cell in enumerate(cfg.cells()) for trial in range(cfg.trials)]
    logger.info("Experiment %s (%s): %d cells x %d trials", run_id, cfg.mode, len(tasks) // cfg.trials, cfg.trials)
    outputs = Parallel(n_jobs=cfg.n_jobs)(
        delayed(run_trial)(cfg, index, cell, trial) for index, cell, trial in tasks
    )

    rows = []
    for trial_rows, matrices in outputs:
        rows.extend(trial_rows)
        for name, matrix in matrices.items():
            backend.save_affinity(run_id, name, matrix)
    summary = summarize(rows)
    backend.save_trial_results(run_id, rows)
    backend.save_summary(run_id, summary)
    return rows, summary
