from datetime import datetime
from typing import List, Optional

from sqlalchemy.orm import Session

from app.config.logging import setup_logger
from app.models.run_record import STATUS_COMPLETED, STATUS_FAILED, RunRecord

logger = setup_logger(__name__)


def get_run(db: Session, strategy_id: str, seed: int) -> Optional[RunRecord]:
    """(strateji, tohum) çiftine ait defter kaydını getirir."""
    try:
        return db.query(RunRecord).filter(
            RunRecord.strategy_id == strategy_id, RunRecord.seed == seed
        ).first()
    except Exception as e:
        logger.error(f"Koşu kaydı getirme hatası - {strategy_id}/{seed}: {str(e)}")
        raise


def get_runs(db: Session, status: Optional[str] = None) -> List[RunRecord]:
    try:
        query = db.query(RunRecord)
        if status is not None:
            query = query.filter(RunRecord.status == status)
        return query.order_by(RunRecord.strategy_id, RunRecord.seed).all()
    except Exception as e:
        logger.error(f"Koşu kayıtları getirilirken hata oluştu: {str(e)}")
        raise


def get_failed_runs(db: Session, strategy_id: Optional[str] = None) -> List[RunRecord]:
    runs = get_runs(db, STATUS_FAILED)
    if strategy_id is not None:
        runs = [r for r in runs if r.strategy_id == strategy_id]
    return runs


def _upsert(db: Session, strategy_id: str, seed: int, **fields) -> RunRecord:
    try:
        record = get_run(db, strategy_id, seed)
        if record is None:
            record = RunRecord(strategy_id=strategy_id, seed=seed, created_at=datetime.utcnow())
            db.add(record)
        for key, value in fields.items():
            setattr(record, key, value)
        record.updated_at = datetime.utcnow()
        db.commit()
        db.refresh(record)
        return record
    except Exception as e:
        db.rollback()
        logger.error(f"Koşu kaydı yazma hatası - {strategy_id}/{seed}: {str(e)}")
        raise


def record_completed(
    db: Session, strategy_id: str, seed: int, f1_macro: float, member_steps: int, elapsed: float
) -> RunRecord:
    record = _upsert(
        db, strategy_id, seed,
        status=STATUS_COMPLETED, f1_macro=f1_macro, member_steps=member_steps,
        error=None, elapsed_seconds=elapsed,
    )
    logger.info(f"Koşu tamamlandı olarak kaydedildi: {strategy_id}/seed_{seed}")
    return record


def record_failed(db: Session, strategy_id: str, seed: int, error: str, elapsed: float) -> RunRecord:
    record = _upsert(
        db, strategy_id, seed,
        status=STATUS_FAILED, f1_macro=None, member_steps=None,
        error=error, elapsed_seconds=elapsed,
    )
    logger.warning(f"Başarısız koşu kaydedildi: {strategy_id}/seed_{seed} - {error}")
    return record
