import sqlalchemy.exc

from ensemblekss import db
from ensemblekss.backend import ResultBackend

# columns stored in their own fields rather than in the JSON blob
_TRIAL_FIELDS = ("algorithm", "trial", "error_pct")


class DBBackend(ResultBackend):

    def __init__(self, session):
        self.session = session

    def is_ready(self):
        # OperationalError/ProgrammingError is raised if the tables don't exist
        try:
            self.session.query(db.ExperimentRun).first()
            return True
        except (sqlalchemy.exc.OperationalError, sqlalchemy.exc.ProgrammingError):
            self.session.rollback()
            return False

    def save_run(self, run_id, mode, config):
        existing = self.session.query(db.ExperimentRun).filter_by(run_id=run_id).first()
        if existing:
            # re-running the same configuration replaces its results
            for model in (db.TrialResult, db.SummaryResult, db.AffinityMatrix):
                self.session.query(model).filter_by(run_id=run_id).delete()
            existing.config = config
            existing.mode = mode
        else:
            self.session.add(db.ExperimentRun(run_id=run_id, mode=mode, config=config))
        self.session.commit()

    def save_trial_results(self, run_id, rows):
        for index, row in enumerate(rows):
            extra = {key: value for key, value in row.items() if key not in _TRIAL_FIELDS}
            self.session.add(db.TrialResult(
                run_id=run_id,
                row_index=index,
                algorithm=row["algorithm"],
                trial=int(row["trial"]),
                error_pct=float(row["error_pct"]),
                data=extra,
            ))
        self.session.commit()

    def save_summary(self, run_id, rows):
        for index, row in enumerate(rows):
            self.session.add(db.SummaryResult(run_id=run_id, row_index=index, data=dict(row)))
        self.session.commit()

    def save_affinity(self, run_id, name, matrix):
        self.session.add(db.AffinityMatrix(run_id=run_id, name=name, entries=[list(map(float, r)) for r in matrix]))
        self.session.commit()

    def get_trial_results(self, run_id):
        results = self.session.query(db.TrialResult).filter_by(run_id=run_id).order_by(db.TrialResult.row_index).all()
        rows = []
        for tr in results:
            row = dict(tr.data)
            row.update({"algorithm": tr.algorithm, "trial": tr.trial, "error_pct": tr.error_pct})
            rows.append(row)
        return rows
