"""CSV and JSON persistence for data matrices, labelings, affinities and problem instances.

Data matrices are stored with one row per ambient dimension and one column per
point, no header. Labelings are one integer per line, 0-based.
"""
import json
import pathlib

import numpy as np
import pandas as pd

from ensemblekss.geometry import DataValidationError, check_data
from ensemblekss.model import ProblemInstance


def _read_matrix(path):
    try:
        frame = pd.read_csv(path, header=None, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        raise DataValidationError(f"{path}: {e}") from e
    if frame.isna().to_numpy().any():
        raise DataValidationError(f"{path} has missing or NaN entries (ragged rows?)")
    try:
        return frame.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise DataValidationError(f"{path}: {e}") from e


def load_data_csv(path):
    """Load a D x N data matrix, checking rectangularity and finiteness"""
    return check_data(_read_matrix(path))


def save_data_csv(path, data):
    np.savetxt(path, np.asarray(data, dtype=np.float64), delimiter=",", fmt="%.17g")


def load_matrix_csv(path):
    matrix = _read_matrix(path)
    if not np.all(np.isfinite(matrix)):
        raise DataValidationError(f"{path} contains non-finite entries")
    return matrix


def save_matrix_csv(path, matrix):
    np.savetxt(path, np.asarray(matrix, dtype=np.float64), delimiter=",", fmt="%.17g")


def load_labels(path):
    try:
        frame = pd.read_csv(path, header=None)
    except pd.errors.EmptyDataError:
        return np.zeros(0, dtype=np.int64)
    except pd.errors.ParserError as e:
        raise DataValidationError(f"{path}: {e}") from e
    if frame.shape[1] != 1 or not pd.api.types.is_integer_dtype(frame[0]):
        raise DataValidationError(f"{path}: labels must be one integer per line")
    return frame[0].to_numpy(dtype=np.int64)


def save_labels(path, labels):
    pd.Series(np.asarray(labels, dtype=np.int64)).to_csv(path, header=False, index=False, lineterminator="\n")


def instance_to_dict(instance: ProblemInstance):
    return {
        "true_bases": [np.asarray(b).tolist() for b in instance.true_bases],
        "noise_sigma": instance.noise_sigma,
        "missing_mask": None if instance.missing_mask is None else [np.asarray(m).tolist() for m in instance.missing_mask],
        "generator_config": instance.generator_config,
    }


def save_instance(directory, instance: ProblemInstance):
    """Write data.csv, labels.csv and instance.json into `directory`"""
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_data_csv(directory / "data.csv", instance.data)
    save_labels(directory / "labels.csv", instance.true_labels)
    with open(directory / "instance.json", "w") as fp:
        json.dump(instance_to_dict(instance), fp, indent=2)


def load_instance(directory):
    directory = pathlib.Path(directory)
    data = load_data_csv(directory / "data.csv")
    labels = load_labels(directory / "labels.csv")
    with open(directory / "instance.json") as fp:
        meta = json.load(fp)
    mask = meta.get("missing_mask")
    return ProblemInstance(
        data=data,
        true_labels=labels,
        true_bases=[np.array(b, dtype=np.float64) for b in meta["true_bases"]],
        noise_sigma=float(meta["noise_sigma"]),
        missing_mask=None if mask is None else [np.array(m, dtype=np.int64) for m in mask],
        generator_config=meta.get("generator_config", {}),
    )
