import numpy as np
import pytest

from ensemblekss import datafile, synth
from ensemblekss.geometry import DataValidationError


def test_save_and_load_instance(tmp_path):
    instance = synth.apply_missing(synth.gen_random_uos(D=5, K=2, dims=2, counts=3, sigma=0.1, seed=2), 1, seed=3)
    datafile.save_instance(tmp_path / "inst", instance)
    assert sorted(p.name for p in (tmp_path / "inst").iterdir()) == ["data.csv", "instance.json", "labels.csv"]

    loaded = datafile.load_instance(tmp_path / "inst")
    assert np.array_equal(loaded.data, instance.data)
    assert np.array_equal(loaded.true_labels, instance.true_labels)
    assert all(np.array_equal(a, b) for a, b in zip(loaded.true_bases, instance.true_bases))
    assert all(np.array_equal(a, b) for a, b in zip(loaded.missing_mask, instance.missing_mask))
    assert loaded.generator_config["missing"]["s"] == 1


def test_labels_file_is_one_integer_per_line(tmp_path):
    path = tmp_path / "labels.csv"
    datafile.save_labels(path, [2, 0, 1])
    assert path.read_text() == "2\n0\n1\n"


def test_load_data_rejects_ragged_rows(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(DataValidationError):
        datafile.load_data_csv(path)


def test_load_data_rejects_overlong_row(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2\n3,4,5\n")
    with pytest.raises(DataValidationError):
        datafile.load_data_csv(path)


def test_load_data_skips_blank_lines(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2\n\n3,4\n")
    np.testing.assert_array_equal(datafile.load_data_csv(path), [[1.0, 2.0], [3.0, 4.0]])


def test_load_empty_labels(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("")
    assert datafile.load_labels(path).shape == (0,)


def test_load_data_rejects_non_finite(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,nan\n4,5\n")
    with pytest.raises(DataValidationError):
        datafile.load_data_csv(path)


def test_load_data_rejects_text(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,a\n")
    with pytest.raises(DataValidationError):
        datafile.load_data_csv(path)


def test_load_labels_rejects_non_integers(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("0\n1.5\n")
    with pytest.raises(DataValidationError):
        datafile.load_labels(path)


def test_matrix_csv_keeps_full_precision(tmp_path):
    matrix = np.array([[0.0, 1 / 3], [1 / 3, 0.0]])
    datafile.save_matrix_csv(tmp_path / "a.csv", matrix)
    assert np.array_equal(datafile.load_matrix_csv(tmp_path / "a.csv"), matrix)
