import json

import numpy as np
import pytest

from ensemblekss.backend.csv_backend import CsvBackend
from harness import experiment
from harness.experiment import ExperimentConfig, ExperimentConfigError


def small_grid(output_dir, **changes):
    values = dict(mode="grid_Nk_by_d", Nk=[10], d=[2], D=20, K=2, B=20, trials=2,
                  algorithms=["ekss", "ekss0", "tsc", "kss"], kss_restarts=2, output_dir=str(output_dir))
    values.update(changes)
    return ExperimentConfig(**values)


def test_threshold_rule():
    assert experiment.threshold_rule("ekss", 500) == 84
    assert experiment.threshold_rule("tsc", 500) == 25
    assert experiment.threshold_rule("ekss0", 500) == 25
    assert experiment.threshold_rule("ekss", 10) == 3


def test_make_grid():
    grid = experiment.make_grid(10, 500, integer=True)
    assert len(grid) == 8
    assert grid[0] == 10 and grid[-1] == 500
    assert grid == sorted(set(grid))
    assert experiment.make_grid(0, 1, points=3, spacing="linear") == [0.0, 0.5, 1.0]
    with pytest.raises(ExperimentConfigError):
        experiment.make_grid(1, 2, spacing="cubic")


def test_config_defaults():
    cfg = ExperimentConfig(mode="noisy_theta_sweep")
    assert cfg.Nk == [500] and cfg.d == [10] and cfg.K == 3
    assert cfg.sigma == [pytest.approx(np.sqrt(0.05))]
    assert cfg.theta[0] == pytest.approx(0.001) and cfg.theta[-1] == pytest.approx(0.08)
    assert len(cfg.theta) == 20
    angled = ExperimentConfig(mode="grid_Nk_by_theta")
    assert len(angled.theta) == 20
    assert angled.theta[0] == pytest.approx(0.001) and angled.theta[-1] == pytest.approx(0.8)
    assert len(angled.Nk) == 8
    fig1 = ExperimentConfig(mode="fig1_progression")
    assert (fig1.K, fig1.Nk, fig1.d, fig1.B_list) == (4, [100], [3], [1, 5, 50])


@pytest.mark.parametrize("values", [
    {"mode": "fig2"},
    {"mode": "grid_Nk_by_d", "trials": 0},
    {"mode": "grid_Nk_by_d", "algorithms": ["ssc"]},
    {"mode": "grid_Nk_by_theta", "K": 4},
    {"mode": "fig1_progression", "B_list": []},
])
def test_config_invalid(values):
    with pytest.raises(ExperimentConfigError):
        ExperimentConfig.from_dict(values)


def test_config_unknown_setting():
    with pytest.raises(ExperimentConfigError):
        ExperimentConfig.from_dict({"mode": "grid_Nk_by_d", "colour": "red"})


def test_config_from_json_with_overrides(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"mode": "grid_Nk_by_d", "Nk": [20], "trials": 4, "seed": 1}))
    cfg = ExperimentConfig.from_json(path, {"output_dir": "elsewhere"}, trials=2, seed=None)
    assert (cfg.Nk, cfg.trials, cfg.seed, cfg.output_dir) == ([20], 2, 1, "elsewhere")


def test_cells_order():
    cfg = ExperimentConfig(mode="grid_Nk_by_theta", Nk=[10, 20], theta=[0.1, 0.2])
    cells = cfg.cells()
    assert [(c["theta"], c["N_k"]) for c in cells] == [(0.1, 10), (0.1, 20), (0.2, 10), (0.2, 20)]


def test_run_experiment_rows(tmp_path):
    cfg = small_grid(tmp_path)
    rows, summary = experiment.run_experiment(cfg, CsvBackend(tmp_path))
    assert len(rows) == 8
    assert {r["algorithm"] for r in rows} == {"ekss", "ekss0", "tsc", "kss"}
    assert all(0.0 <= r["error_pct"] <= 100.0 for r in rows)
    assert [r["q"] for r in rows if r["algorithm"] == "kss"] == [None, None]
    assert len(summary) == 4
    assert all(s["trials"] == 2 for s in summary)
    assert (tmp_path / "trials.csv").exists() and (tmp_path / "summary.csv").exists()


def test_run_experiment_deterministic(tmp_path):
    for name in ("a", "b"):
        cfg = small_grid(tmp_path / name, trials=1, algorithms=["ekss", "tsc"])
        experiment.run_experiment(cfg, CsvBackend(tmp_path / name))
    assert (tmp_path / "a" / "trials.csv").read_bytes() == (tmp_path / "b" / "trials.csv").read_bytes()


def test_run_experiment_independent_of_workers(tmp_path):
    serial, _ = experiment.run_experiment(small_grid(tmp_path / "a", n_jobs=1), CsvBackend(tmp_path / "a"))
    parallel, _ = experiment.run_experiment(small_grid(tmp_path / "b", n_jobs=2), CsvBackend(tmp_path / "b"))
    assert serial == parallel


def test_fig1_progression_writes_affinities(tmp_path):
    cfg = ExperimentConfig(mode="fig1_progression", D=20, K=2, d=[2], Nk=[15], B_list=[1, 3], trials=2,
                           output_dir=str(tmp_path))
    rows, _ = experiment.run_experiment(cfg, CsvBackend(tmp_path))
    assert [(r["B"], r["trial"]) for r in rows] == [(1, 0), (3, 0), (1, 1), (3, 1)]
    for name in ("affinity_B1.csv", "affinity_B3.csv"):
        matrix = np.loadtxt(tmp_path / name, delimiter=",")
        assert matrix.shape == (30, 30)


def test_run_experiment_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = small_grid(blocker / "out")
    with pytest.raises(ExperimentConfigError):
        experiment.run_experiment(cfg, CsvBackend(blocker / "out"))


def test_theory_suite_mode(tmp_path, monkeypatch):
    report = {"seed": 0, "passed": True, "checks": {
        "monotone": {"passed": True},
        "concentration": {"passed": True, "slope": -0.5, "max_deviation": [0.1, 0.03]},
    }}
    monkeypatch.setattr("harness.theory.theory_suite", lambda seed: report)
    cfg = ExperimentConfig(mode="theory_suite", output_dir=str(tmp_path))
    rows, summary = experiment.run_experiment(cfg, CsvBackend(tmp_path))
    assert rows == []
    assert summary == [{"check": "monotone", "passed": True},
                       {"check": "concentration", "passed": True, "slope": -0.5, "max_deviation": "[0.1, 0.03]"}]
    assert (tmp_path / "summary.csv").read_text().splitlines()[0] == "check,max_deviation,passed,slope"
