from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Union

from sqlalchemy import create_engine
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.orm import sessionmaker

from app.config.logging import setup_logger
from app.config.settings import settings

logger = setup_logger(__name__)

Base = declarative_base()

# koşu dizini -> oturum fabrikası
_session_factories: Dict[str, sessionmaker] = {}


def ledger_url(run_dir: Union[str, Path]) -> str:
    return f"sqlite:///{Path(run_dir).resolve() / settings.LEDGER_DB_NAME}"


def get_session_factory(run_dir: Union[str, Path]) -> sessionmaker:
    key = str(Path(run_dir).resolve())
    factory = _session_factories.get(key)
    if factory is None:
        Path(key).mkdir(parents=True, exist_ok=True)
        engine = create_engine(ledger_url(key), connect_args={"check_same_thread": False})
        init_db(engine)
        factory = sessionmaker(autocommit=False, autoflush=False, bind=engine)
        _session_factories[key] = factory
    return factory


@contextmanager
def get_db(run_dir: Union[str, Path]):
    db = get_session_factory(run_dir)()
    try:
        yield db
    finally:
        db.close()


def init_db(engine):
    from app.models.run_record import RunRecord  # noqa: F401
    Base.metadata.create_all(bind=engine)
