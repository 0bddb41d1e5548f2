import datetime

from sqlalchemy import JSON, TIMESTAMP, Float, ForeignKey, Index, Integer, Text, func
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column


class Base(DeclarativeBase):
    pass


class ExperimentRun(Base):
    """One invocation of an experiment; every result row points back to it"""
    __tablename__ = 'experiment_run'
    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[str] = mapped_column(Text, nullable=False, index=True, unique=True)
    mode: Mapped[str] = mapped_column(Text, nullable=False)
    config: Mapped[dict] = mapped_column(JSON)
    added: Mapped[datetime.datetime] = mapped_column(TIMESTAMP(timezone=True), nullable=False, server_default=func.now())

    def __repr__(self):
        return f'<ExperimentRun {self.id} ({self.run_id}, {self.mode})>'


class TrialResult(Base):
    __tablename__ = 'trial_result'
    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[str] = mapped_column(ForeignKey('experiment_run.run_id'), nullable=False)
    row_index: Mapped[int] = mapped_column(Integer, nullable=False)
    algorithm: Mapped[str] = mapped_column(Text, nullable=False)
    trial: Mapped[int] = mapped_column(Integer, nullable=False)
    error_pct: Mapped[float] = mapped_column(Float, nullable=False)
    # grid coordinates and any extra measurements
    data: Mapped[dict] = mapped_column(JSON)
    __table_args__ = (
        Index('trial_result_idx_run_row', "run_id", "row_index", unique=True),
    )

    def __repr__(self):
        return f'<TrialResult {self.id} ({self.run_id}, {self.algorithm}, trial {self.trial})>'


class SummaryResult(Base):
    __tablename__ = 'summary_result'
    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[str] = mapped_column(ForeignKey('experiment_run.run_id'), nullable=False, index=True)
    row_index: Mapped[int] = mapped_column(Integer, nullable=False)
    data: Mapped[dict] = mapped_column(JSON)

    def __repr__(self):
        return f'<SummaryResult {self.id} ({self.run_id})>'


class AffinityMatrix(Base):
    __tablename__ = 'affinity_matrix'
    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[str] = mapped_column(ForeignKey('experiment_run.run_id'), nullable=False, index=True)
    name: Mapped[str] = mapped_column(Text, nullable=False)
    entries: Mapped[list] = mapped_column(JSON)

    def __repr__(self):
        return f'<AffinityMatrix {self.id} ({self.run_id}, {self.name})>'
