import logging
from typing import List, Optional

from sqlalchemy import create_engine, desc, event
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from models import Base, FuzzRun, SuiteResult, FailingInstance
from services.fuzz_service import Report

logger = logging.getLogger(__name__)


class LedgerService:
    """Optional persistence of fuzz reports.

    Database problems are logged and swallowed: a run that cannot be recorded
    still produces its report.
    """

    def __init__(self, database_url: str):
        self.database_url = database_url
        self.SessionLocal = None
        masked_url = database_url.split('@')[-1] if '@' in database_url else database_url
        logger.info(f"[Ledger] Using database: {masked_url}")
        try:
            if database_url.startswith("sqlite"):
                # In-memory databases live inside one connection
                extra = {"poolclass": StaticPool} if database_url in ("sqlite://", "sqlite:///:memory:") else {}
                engine = create_engine(database_url, connect_args={"check_same_thread": False}, **extra)

                @event.listens_for(engine, "connect")
                def set_sqlite_pragma(dbapi_connection, connection_record):
                    cursor = dbapi_connection.cursor()
                    cursor.execute("PRAGMA foreign_keys=ON")
                    cursor.close()
            else:
                engine = create_engine(database_url, pool_pre_ping=True)
            Base.metadata.create_all(bind=engine)
            self.engine = engine
            self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
        except Exception as e:
            logger.warning(f"[Ledger] Database not available ({e}). Runs will not be recorded.")

    @property
    def available(self) -> bool:
        return self.SessionLocal is not None

    def record(self, report: Report) -> Optional[str]:
        """Store a report; returns the run id, or None when the ledger is unavailable."""
        if not self.available:
            return None
        db = self.SessionLocal()
        try:
            run = FuzzRun(seed=report.seed, dims=report.dims, trials=report.trials,
                          total_failures=report.total_failures,
                          wall_clock_seconds=report.wall_clock_seconds)
            for name, suite in report.suites.items():
                run.suites.append(SuiteResult(
                    suite=name, passed=suite.passed, failed=suite.failed,
                    indeterminate=suite.indeterminate, worst_residuals=suite.worst_residuals,
                    flags=suite.flags, wall_clock_seconds=suite.wall_clock_seconds))
                for failure in suite.failing_instances:
                    run.failures.append(FailingInstance(
                        suite=name, dim=failure.dim, trial=failure.trial, error=failure.error))
            db.add(run)
            db.commit()
            logger.info(f"[Ledger] Recorded run {run.id} with {report.total_failures} failures")
            return run.id
        except Exception as e:
            db.rollback()
            logger.error(f"[Ledger] Failed to record run: {e}")
            return None
        finally:
            db.close()

    def history(self, limit: int = 20) -> List[dict]:
        """Most recent runs first, each with its failing instances."""
        if not self.available:
            return []
        db = self.SessionLocal()
        try:
            runs = db.query(FuzzRun).order_by(desc(FuzzRun.created_at)).limit(limit).all()
            return [{
                "id": run.id,
                "created_at": run.created_at.isoformat() if run.created_at else None,
                "seed": run.seed,
                "dims": run.dims,
                "trials": run.trials,
                "total_failures": run.total_failures,
                "failures": [{"suite": f.suite, "dim": f.dim, "trial": f.trial, "error": f.error}
                             for f in run.failures],
            } for run in runs]
        except Exception as e:
            logger.error(f"[Ledger] Failed to read history: {e}")
            return []
        finally:
            db.close()
