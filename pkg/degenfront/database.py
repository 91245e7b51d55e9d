import os
from contextlib import contextmanager
from functools import lru_cache
from pathlib import Path
from typing import Generator, Iterator, Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

Base = declarative_base()


def database_url(output_dir: Optional[str] = None) -> str:
    """DEGENFRONT_DATABASE_URL, else a SQLite registry inside the output directory"""
    url = os.getenv("DEGENFRONT_DATABASE_URL")
    if url:
        return url
    root = Path(output_dir or ".")
    root.mkdir(parents=True, exist_ok=True)
    return f"sqlite:///{(root / 'runs.db').resolve()}"


@lru_cache(maxsize=8)
def get_engine(url: str) -> Engine:
    engine = create_engine(url)
    # Import models so they are registered on Base before creating tables
    from degenfront.db.models import RunRecord  # noqa: F401

    Base.metadata.create_all(bind=engine)
    return engine


def session_factory(url: str) -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=get_engine(url))


def get_db(url: str) -> Generator[Session, None, None]:
    """
    Yields a registry session and closes it afterwards
    """
    db = session_factory(url)()
    try:
        yield db
    finally:
        db.close()


@contextmanager
def registry_session(url: str) -> Iterator[Session]:
    yield from get_db(url)
