"""Runtime settings for the bellwave simulator."""

import logging
import os
from dataclasses import dataclass, field
from typing import Optional

from dotenv import load_dotenv

load_dotenv()  # .env in the working directory, if any

logger = logging.getLogger("bellwave")


@dataclass
class SimulationConfig:
    """Defaults for Monte Carlo runs."""

    seed: int = 20240501
    n_events: int = 100_000
    n_partitions: int = 8
    n_workers: int = 1
    chunk_size: int = 262_144
    debug_checks: bool = False  # assert per-event weight sums


@dataclass
class OutputConfig:
    """Configuration for emitted files."""

    float_digits: int = 17
    svg_hashsalt: str = "bellwave"


@dataclass
class LoggingConfig:
    """Configuration for logging."""

    level: str = "INFO"
    log_file: Optional[str] = None
    use_colors: bool = True


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Invalid {name}: {raw!r}. Using default: {default}")
        return default


def _env_flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.lower() in ("true", "1", "yes")


@dataclass
class Settings:
    """Global settings for the application."""

    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def __post_init__(self) -> None:
        """Initialize settings from environment variables."""
        sim = self.simulation
        sim.seed = _env_int("BELLWAVE_SEED", sim.seed)
        sim.n_events = _env_int("BELLWAVE_EVENTS", sim.n_events)
        sim.n_partitions = _env_int("BELLWAVE_PARTITIONS", sim.n_partitions)
        sim.n_workers = _env_int("BELLWAVE_WORKERS", sim.n_workers)
        sim.chunk_size = _env_int("BELLWAVE_CHUNK_SIZE", sim.chunk_size)
        sim.debug_checks = _env_flag("BELLWAVE_DEBUG_CHECKS", sim.debug_checks)

        self.output.float_digits = _env_int("BELLWAVE_FLOAT_DIGITS", self.output.float_digits)

        if log_level := os.getenv("LOG_LEVEL"):
            if log_level.upper() in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
                self.logging.level = log_level.upper()
            else:
                logger.warning(f"Invalid LOG_LEVEL: {log_level}. Using default: {self.logging.level}")

        if log_file := os.getenv("LOG_FILE"):
            self.logging.log_file = log_file

        self.logging.use_colors = _env_flag("LOG_COLORS", self.logging.use_colors)

    def validate(self) -> None:
        """Validate that settings are consistent.

        Raises:
            ValueError: If a count is not positive or the seed is out of range
        """
        sim = self.simulation
        for name in ("n_events", "n_partitions", "n_workers", "chunk_size"):
            if getattr(sim, name) < 1:
                raise ValueError(f"simulation.{name} must be >= 1, got {getattr(sim, name)}")
        if not 0 <= sim.seed < 2**64:
            raise ValueError(f"simulation.seed must be a 64-bit unsigned integer, got {sim.seed}")
        if not 1 <= self.output.float_digits <= 17:
            raise ValueError("output.float_digits must be between 1 and 17")


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Process-wide settings, built from the environment on first use.

    Raises:
        ValueError: If an env override is out of range
    """
    global _settings
    if _settings is None:
        settings = Settings()
        settings.validate()
        _settings = settings
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call rereads the environment."""
    global _settings
    _settings = None
