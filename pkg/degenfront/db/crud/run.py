from datetime import datetime
from typing import Dict, List, Optional

from sqlalchemy import func
from sqlalchemy.orm import Session

from degenfront.db.models.run import RunRecord


def get_run(db: Session, run_id: int) -> Optional[RunRecord]:
    return db.query(RunRecord).filter(RunRecord.id == run_id).first()


def get_runs(db: Session, skip: int = 0, limit: int = 100) -> List[RunRecord]:
    return db.query(RunRecord).order_by(RunRecord.id).offset(skip).limit(limit).all()


def create_run(db: Session, subcommand: str, config_hash: str, seed: int) -> RunRecord:
    db_run = RunRecord(subcommand=subcommand, config_hash=config_hash, seed=seed, status="running")
    db.add(db_run)
    db.commit()
    db.refresh(db_run)
    return db_run


def finish_run(
    db: Session,
    run_id: int,
    exit_code: int,
    artifacts: Optional[List[str]] = None,
    detail: Optional[str] = None,
) -> Optional[RunRecord]:
    db_run = get_run(db, run_id)
    if db_run:
        db_run.exit_code = int(exit_code)
        db_run.status = "ok" if exit_code == 0 else "failed"
        db_run.artifacts = list(artifacts or [])
        db_run.detail = detail
        db_run.finished_at = datetime.utcnow()
        db.commit()
        db.refresh(db_run)
    return db_run


def count_by_status(db: Session) -> Dict[str, int]:
    rows = db.query(RunRecord.status, func.count(RunRecord.id)).group_by(RunRecord.status).all()
    return {status: int(count) for status, count in rows}
