"""
Run store: the SQLite file that keeps finished experiments.

The engine is built on first use for the current ``settings.DATABASE_URL``
and cached per URL. Seed workers never open it; only the parent process
stores a run once every seed has finished. Parallel sweeps may still share
one file, so commits retry on a locked database.
"""

from contextlib import contextmanager
from functools import lru_cache
from pathlib import Path
from typing import Iterator

from loguru import logger
from sqlalchemy import Engine, create_engine, event
from sqlalchemy.engine import make_url
from sqlalchemy.exc import OperationalError
from sqlalchemy.orm import Session, declarative_base, sessionmaker
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from causal_alarm_rl.config import settings

Base = declarative_base()

LOCK_TIMEOUT_S = 30


def _sqlite_pragmas(dbapi_conn, connection_record):
    cursor = dbapi_conn.cursor()
    # episode rows go with their run
    cursor.execute("PRAGMA foreign_keys=ON")
    cursor.execute("PRAGMA journal_mode=WAL")
    cursor.close()


@lru_cache(maxsize=None)
def _engine_for(url: str) -> Engine:
    parsed = make_url(url)
    if parsed.get_backend_name() != "sqlite":
        raise ValueError(f"the run store is a SQLite file, got {url}")
    if parsed.database and parsed.database != ":memory:":
        Path(parsed.database).parent.mkdir(parents=True, exist_ok=True)

    engine = create_engine(
        url,
        connect_args={"check_same_thread": False, "timeout": LOCK_TIMEOUT_S},
        echo=settings.DEBUG,
    )
    event.listen(engine, "connect", _sqlite_pragmas)

    # registers the tables on Base.metadata
    from causal_alarm_rl import models  # noqa: F401

    Base.metadata.create_all(bind=engine)
    logger.info(f"Run store ready at {url}")
    return engine


def get_engine() -> Engine:
    """Engine for the configured run store; tables are created on first use."""
    return _engine_for(settings.DATABASE_URL)


@contextmanager
def session_scope() -> Iterator[Session]:
    """A run store session, rolled back on error and always closed."""
    session = sessionmaker(bind=get_engine(), autoflush=False)()
    try:
        yield session
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


# wraps a whole open-write-commit unit; a rolled-back session drops its pending rows
retry_on_lock = retry(
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.5, min=0.5, max=4),
    retry=retry_if_exception_type(OperationalError),
    reraise=True,
)
