import json
import pathlib

import numpy as np
import pandas as pd

from ensemblekss.backend import TRIAL_COLUMNS, ResultBackend

RUN_FILE = "run.json"
TRIALS_FILE = "trials.csv"
SUMMARY_FILE = "summary.csv"
AFFINITY_FILE = "affinity_{}.csv"


def _fieldnames(rows, leading):
    extra = sorted({key for row in rows for key in row} - set(leading))
    return [c for c in leading if any(c in row for row in rows)] + extra


def _write_rows(path, rows, leading):
    # object columns keep ints as ints next to missing values
    frame = pd.DataFrame(rows, columns=_fieldnames(rows, leading), dtype=object)
    frame.to_csv(path, index=False, lineterminator="\n")


class CsvBackend(ResultBackend):
    """Tidy CSV files (one header row, one row per measurement) in a single output directory"""

    def __init__(self, output_dir):
        self.output_dir = pathlib.Path(output_dir)

    def is_ready(self):
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            return False
        marker = self.output_dir / ".write-test"
        try:
            marker.touch()
            marker.unlink()
            return True
        except OSError:
            return False

    def save_run(self, run_id, mode, config):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with open(self.output_dir / RUN_FILE, "w") as fp:
            json.dump({"run_id": run_id, "mode": mode, "config": config}, fp, indent=2, sort_keys=True)

    def save_trial_results(self, run_id, rows):
        _write_rows(self.output_dir / TRIALS_FILE, rows, TRIAL_COLUMNS)

    def save_summary(self, run_id, rows):
        _write_rows(self.output_dir / SUMMARY_FILE, rows, TRIAL_COLUMNS)

    def save_affinity(self, run_id, name, matrix):
        np.savetxt(self.output_dir / AFFINITY_FILE.format(name), np.asarray(matrix, dtype=np.float64),
                   delimiter=",", fmt="%.17g")

    def get_trial_results(self, run_id):
        path = self.output_dir / TRIALS_FILE
        if not path.exists():
            return []
        frame = pd.read_csv(path)
        rows = frame.astype(object).where(frame.notna(), None).to_dict("records")
        for row in rows:
            row["error_pct"] = float(row["error_pct"])
            row["trial"] = int(row["trial"])
        return rows
