import json

import numpy as np
import pytest
from click.testing import CliRunner

from ensemblekss import datafile
from harness import cli


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def instance_dir(runner, tmp_path):
    out = tmp_path / "instance"
    result = runner.invoke(cli.cli, ["generate", "--D", "20", "--K", "2", "--d", "2", "--Nk", "15",
                                     "--seed", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_generate(instance_dir):
    assert datafile.load_data_csv(instance_dir / "data.csv").shape == (20, 30)
    assert datafile.load_labels(instance_dir / "labels.csv").tolist() == [0] * 15 + [1] * 15
    meta = json.loads((instance_dir / "instance.json").read_text())
    assert meta["generator_config"]["D"] == 20


def test_generate_angled_with_missing(runner, tmp_path):
    out = tmp_path / "angled"
    result = runner.invoke(cli.cli, ["generate", "--kind", "angled", "--D", "9", "--d", "3", "--theta", "0.5",
                                     "--Nk", "4", "--missing", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    instance = datafile.load_instance(out)
    assert instance.num_points == 12
    assert all(m.size == 2 for m in instance.missing_mask)


def test_generate_angled_needs_theta(runner, tmp_path):
    result = runner.invoke(cli.cli, ["generate", "--kind", "angled", "--out", str(tmp_path / "x")])
    assert result.exit_code == 2
    assert "--theta" in result.output


@pytest.mark.parametrize("algo,extra", [
    ("ekss", ["--dbar", "2", "--q", "3", "--B", "20"]),
    ("ekss0", ["--dbar", "2", "--q", "none", "--B", "20"]),
    ("tsc", ["--q", "3"]),
    ("kss", ["--dbar", "2"]),
])
def test_cluster_then_evaluate(runner, instance_dir, tmp_path, algo, extra):
    labels_path = tmp_path / "labels.csv"
    result = runner.invoke(cli.cli, ["cluster", "--data", str(instance_dir / "data.csv"), "--algo", algo,
                                     "--K", "2", "--out", str(labels_path)] + extra)
    assert result.exit_code == 0, result.output
    assert datafile.load_labels(labels_path).shape == (30,)

    result = runner.invoke(cli.cli, ["evaluate", "--labels", str(labels_path),
                                     "--truth", str(instance_dir / "labels.csv")])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert 0.0 <= report["clustering_error_pct"] <= 100.0


def test_cluster_exports_affinity_for_evaluate(runner, instance_dir, tmp_path):
    result = runner.invoke(cli.cli, ["cluster", "--data", str(instance_dir / "data.csv"), "--algo", "ekss",
                                     "--K", "2", "--dbar", "2", "--B", "20", "--normalize",
                                     "--out", str(tmp_path / "labels.csv"),
                                     "--affinity-out", str(tmp_path / "A.csv")])
    assert result.exit_code == 0, result.output
    A = datafile.load_matrix_csv(tmp_path / "A.csv")
    assert A.shape == (30, 30)
    assert np.allclose(A, A.T)
    assert np.all(np.diag(A) == 0)

    result = runner.invoke(cli.cli, ["evaluate", "--labels", str(tmp_path / "labels.csv"),
                                     "--truth", str(instance_dir / "labels.csv"), "--affinity", str(tmp_path / "A.csv"),
                                     "--data", str(instance_dir / "data.csv"), "--q", "2",
                                     "--instance", str(instance_dir), "--out", str(tmp_path / "report.json")])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["num_components"] >= 1
    assert report["phi_q"] is not None
    assert len(report["pairwise_aff"]) == 2


def test_exported_thresholded_affinity_has_no_false_connections(runner, tmp_path, orthogonal_uos):
    data, truth = orthogonal_uos(D=30, K=3, d=3, Nk=40, seed=2)
    datafile.save_data_csv(tmp_path / "data.csv", data)
    datafile.save_labels(tmp_path / "truth.csv", truth)
    result = runner.invoke(cli.cli, ["cluster", "--data", str(tmp_path / "data.csv"), "--algo", "ekss0",
                                     "--K", "3", "--Kbar", "2", "--dbar", "1", "--q", "3", "--B", "2000",
                                     "--out", str(tmp_path / "labels.csv"), "--affinity-out", str(tmp_path / "A.csv")])
    assert result.exit_code == 0, result.output
    A = datafile.load_matrix_csv(tmp_path / "A.csv")
    assert np.all(np.diag(A) == 0)

    result = runner.invoke(cli.cli, ["evaluate", "--labels", str(tmp_path / "labels.csv"),
                                     "--truth", str(tmp_path / "truth.csv"), "--affinity", str(tmp_path / "A.csv")])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["nfc"] is True
    assert report["violating_edges"] == []


def test_cluster_rejects_bad_q(runner, instance_dir, tmp_path):
    result = runner.invoke(cli.cli, ["cluster", "--data", str(instance_dir / "data.csv"), "--K", "2",
                                     "--dbar", "2", "--q", "many", "--out", str(tmp_path / "l.csv")])
    assert result.exit_code == 2


def test_experiment_from_config_file(runner, tmp_path):
    config = tmp_path / "exp.json"
    config.write_text(json.dumps({"mode": "grid_Nk_by_d", "Nk": [8], "d": [1], "D": 10, "K": 2, "B": 10,
                                  "algorithms": ["ekss0", "tsc"]}))
    out = tmp_path / "results"
    result = runner.invoke(cli.cli, ["experiment", "--config", str(config), "--seed", "3", "--output-dir", str(out)],
                           env={"CONFIG_BACKEND": "csv"})
    assert result.exit_code == 0, result.output
    run = json.loads((out / "run.json").read_text())
    assert run["config"]["seed"] == 3
    assert (out / "trials.csv").read_text().splitlines()[0].startswith("mode,cell,algorithm,trial")


def test_experiment_requires_mode(runner):
    result = runner.invoke(cli.cli, ["experiment"])
    assert result.exit_code == 2


def test_theory_failure_exit_code(runner, monkeypatch):
    monkeypatch.setattr(cli, "theory_suite", lambda seed: {"seed": seed, "passed": False, "checks": {}})
    result = runner.invoke(cli.cli, ["theory"])
    assert result.exit_code == 2
    assert json.loads(result.output)["passed"] is False


def test_theory_success_writes_report(runner, monkeypatch, tmp_path):
    monkeypatch.setattr(cli, "theory_suite", lambda seed: {"seed": seed, "passed": True, "checks": {}})
    result = runner.invoke(cli.cli, ["theory", "--seed", "4", "--out", str(tmp_path / "t.json")])
    assert result.exit_code == 0
    assert json.loads((tmp_path / "t.json").read_text())["seed"] == 4


def test_create_db(runner, tmp_path):
    settings = tmp_path / "settings.py"
    settings.write_text(f"SQLALCHEMY_DATABASE_URI = 'sqlite:///{tmp_path / 'r.db'}'\n")
    result = runner.invoke(cli.cli, ["--settings", str(settings), "create-db"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "r.db").exists()


def test_missing_settings_file_is_an_error(runner, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(cli.cli, ["--settings", str(tmp_path / "typo.py"), "create-db"])
    assert result.exit_code == 2
    assert "Creating database tables" not in result.output
    assert list(tmp_path.iterdir()) == []


def test_main_exit_codes(tmp_path, monkeypatch):
    with pytest.raises(SystemExit) as exc:
        cli.main(["cluster", "--data", str(tmp_path / "missing.csv"), "--K", "2", "--out", str(tmp_path / "l")])
    assert exc.value.code == 1

    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--kind", "angled", "--D", "5", "--d", "2", "--theta", "0.3",
                  "--out", str(tmp_path / "x")])
    assert exc.value.code == 1

    monkeypatch.setattr(cli, "theory_suite", lambda seed: {"seed": seed, "passed": False, "checks": {}})
    with pytest.raises(SystemExit) as exc:
        cli.main(["theory"])
    assert exc.value.code == 2

    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
