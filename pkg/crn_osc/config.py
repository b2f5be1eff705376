# crn_osc/config.py

import logging
from pathlib import Path
from typing import Tuple

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

logger = logging.getLogger(__name__)


class Config(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Directory Structure
    BASE_DIR: Path = Path(__file__).parent.parent
    STORAGE_DIR: Path = BASE_DIR / "storage"
    KEYS_DIR: Path = STORAGE_DIR / "keys"
    RECORDS_DIR: Path = STORAGE_DIR / "records"
    TRAJECTORIES_DIR: Path = STORAGE_DIR / "trajectories"

    # Enumeration
    ENUM_CEILING: int = 10**9
    MAX_ENUM_SPECIES: int = 6

    # Parameter sampling (uniform ranges)
    RATE_RANGE: Tuple[float, float] = (0.01, 10.0)
    INITIAL_RANGE: Tuple[float, float] = (0.01, 10.0)
    EXPONENT_RANGE: Tuple[float, float] = (0.5, 3.0)

    # Integration
    RTOL_CERTIFY: float = 1e-8
    ATOL_CERTIFY: float = 1e-10
    RTOL_SCREEN: float = 1e-6
    ATOL_SCREEN: float = 1e-8
    UNBOUNDED_CAP: float = 1e6
    MAX_TIME: float = 2000.0
    MAX_STEPS: int = 200_000
    STIFF_SWITCH_STEPS: int = 5_000

    # Classification and certification
    TAIL_FRACTION: float = 0.25
    CONV_TOL: float = 1e-4
    MIN_SECTION_CROSSINGS: int = 3
    ORBIT_TOL: float = 1e-7
    MIN_ORBIT_AMPLITUDE: float = 1e-6
    MULTIPLIER_MARGIN: float = 1e-3
    TRIVIAL_MULTIPLIER_TOL: float = 1e-6
    NEWTON_MAX_ITER: int = 25
    SCREEN_TOL: float = 1e-3

    # Inheritance
    EPS_GRID: Tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)

    # Runtime
    DEFAULT_SEED: int = 20240101
    THREADS: int = 1
    LOG_LEVEL: str = "INFO"

    def ensure_directories_exist(self):
        """Runtime check that the storage directories exist."""
        for directory in [self.STORAGE_DIR, self.KEYS_DIR, self.RECORDS_DIR, self.TRAJECTORIES_DIR]:
            if not directory.exists():
                logger.info("Runtime directory creation: %s", directory)
                directory.mkdir(parents=True, exist_ok=True)


def setup_logging(level: str = None) -> None:
    """Configure root logging once, with bracketed component prefixes."""
    logging.basicConfig(
        level=(level or config.LOG_LEVEL).upper(),
        format="[%(name)s] %(levelname)s %(message)s",
    )


config = Config()
