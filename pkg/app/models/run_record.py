from datetime import datetime

from sqlalchemy import Column, DateTime, Float, Integer, String, Text, UniqueConstraint

from app.database import Base

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"


class RunRecord(Base):
    __tablename__ = "runs"
    __table_args__ = (UniqueConstraint("strategy_id", "seed", name="uq_run_strategy_seed"),)

    id = Column(Integer, primary_key=True)
    strategy_id = Column(String, nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    status = Column(String, nullable=False)
    f1_macro = Column(Float, nullable=True)
    member_steps = Column(Integer, nullable=True)
    error = Column(Text, nullable=True)
    elapsed_seconds = Column(Float, nullable=True)
    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)
    updated_at = Column(DateTime, default=datetime.utcnow, onupdate=datetime.utcnow, nullable=False)
