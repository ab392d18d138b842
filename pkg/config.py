"""
Gauss-Distill Configuration
Manages environment variables and runtime settings
"""
import logging
import os

from dotenv import load_dotenv
from pydantic_settings import BaseSettings

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Runtime configuration settings"""

    # Logging
    LOG_LEVEL: str = "INFO"

    # Worker pool (0 = available parallelism)
    GAUSS_DISTILL_THREADS: int = 0

    # Monte Carlo
    MC_BLOCK_SIZE: int = 65536  # samples per RNG stream; same seed + block size = same ensemble
    MC_MIN_RELIABLE_SAMPLES: int = 1000
    DEFAULT_SEED: int = 1
    DEFAULT_SAMPLES: int = 1_000_000

    # Sweep: x_used = (1 + margin) * max(x_th, x_sep)
    SWEEP_THRESHOLD_MARGIN: float = 1e-3

    # HTTP service
    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000

    class Config:
        case_sensitive = True
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


# Global settings instance
settings = Settings()


def resolve_workers(requested: int = 0) -> int:
    """Worker count: explicit request, else GAUSS_DISTILL_THREADS, else cpu count."""
    if requested and requested > 0:
        return requested
    if settings.GAUSS_DISTILL_THREADS > 0:
        return settings.GAUSS_DISTILL_THREADS
    return os.cpu_count() or 1


def validate_settings() -> bool:
    """Validate numeric settings"""
    problems = []
    if settings.GAUSS_DISTILL_THREADS < 0:
        problems.append("GAUSS_DISTILL_THREADS must be >= 0")
    if settings.MC_BLOCK_SIZE <= 0:
        problems.append("MC_BLOCK_SIZE must be > 0")
    if settings.MC_MIN_RELIABLE_SAMPLES < 2:
        problems.append("MC_MIN_RELIABLE_SAMPLES must be >= 2")
    if settings.SWEEP_THRESHOLD_MARGIN < 0:
        problems.append("SWEEP_THRESHOLD_MARGIN must be >= 0")
    if not isinstance(logging.getLevelName(settings.LOG_LEVEL.upper()), int):
        problems.append(f"Unknown LOG_LEVEL {settings.LOG_LEVEL}")

    if problems:
        raise ValueError(f"Invalid configuration: {'; '.join(problems)}")

    return True


# Validate on import
try:
    validate_settings()
except ValueError as e:
    logger.warning(f"Configuration warning: {e}")
