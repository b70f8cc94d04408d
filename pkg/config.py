import os
import logging
from dotenv import load_dotenv

from services.substrate import Tolerances

# Force reload from .env so a stale shell export does not win
load_dotenv(override=True)

# Configure logging (stderr; stdout is reserved for JSON output)
logging.basicConfig(
    level=os.getenv('LOG_LEVEL', 'INFO').upper(),
    format='%(asctime)s [%(levelname)s] %(name)s: %(message)s'
)
logger = logging.getLogger(__name__)

class Config:
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()

    # Numerical tolerances
    TOL_RANK_RTOL = float(os.getenv('TOL_RANK_RTOL', 1e-10))
    TOL_EQ_ATOL = float(os.getenv('TOL_EQ_ATOL', 1e-9))
    TOL_MARGIN_DELTA = float(os.getenv('TOL_MARGIN_DELTA', 1e-8))
    TOL_COND_MAX = float(os.getenv('TOL_COND_MAX', 1e12))

    # Fuzz harness defaults
    FUZZ_SEED = int(os.getenv('FUZZ_SEED', 0))
    FUZZ_TRIALS = int(os.getenv('FUZZ_TRIALS', 100))
    FUZZ_DIMS = os.getenv('FUZZ_DIMS', '2,3,4,5,6,7,8')
    FUZZ_WORKERS = int(os.getenv('FUZZ_WORKERS', 1))

    # Common complement search
    COMPLEMENT_RETRY_BUDGET = int(os.getenv('COMPLEMENT_RETRY_BUDGET', 64))
    COMPLEMENT_MIN_RESIDUAL = float(os.getenv('COMPLEMENT_MIN_RESIDUAL', 1e-2))

    # Fuzz-run ledger
    DATABASE_URL = os.getenv('DATABASE_URL', 'sqlite:///fuzz_runs.db')
    if DATABASE_URL.startswith("postgres://"):
        DATABASE_URL = DATABASE_URL.replace("postgres://", "postgresql://", 1)

    @classmethod
    def tolerances(cls, eq_atol=None, margin_delta=None) -> Tolerances:
        """Tolerances from the environment, with optional command-line overrides."""
        return Tolerances(
            rank_rtol=cls.TOL_RANK_RTOL,
            eq_atol=cls.TOL_EQ_ATOL if eq_atol is None else eq_atol,
            margin_delta=cls.TOL_MARGIN_DELTA if margin_delta is None else margin_delta,
            cond_max=cls.TOL_COND_MAX,
        )

    @classmethod
    def fuzz_dims(cls):
        return [int(d) for d in cls.FUZZ_DIMS.split(',') if d.strip()]
