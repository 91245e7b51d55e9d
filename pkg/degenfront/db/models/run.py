from sqlalchemy import Column, Integer, String, DateTime, JSON
from datetime import datetime
from degenfront.database import Base


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    subcommand = Column(String, nullable=False)  # e.g., "front", "spectrum", "check"
    config_hash = Column(String, nullable=False, index=True)
    seed = Column(Integer, nullable=False, default=0)
    status = Column(String, nullable=False, default="running")  # running / ok / failed
    exit_code = Column(Integer, nullable=True)
    detail = Column(String, nullable=True)
    artifacts = Column(JSON, nullable=True)  # list of written paths
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime, nullable=True)

    def __repr__(self):
        return f"<RunRecord(id={self.id}, subcommand='{self.subcommand}', status='{self.status}')>"
