"""Pytest configuration and fixtures."""

import math
import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

# Keep test runs independent of a developer's .env
for _name in ("BELLWAVE_SEED", "BELLWAVE_EVENTS", "BELLWAVE_PARTITIONS", "BELLWAVE_WORKERS",
              "BELLWAVE_CHUNK_SIZE", "BELLWAVE_DEBUG_CHECKS", "BELLWAVE_FLOAT_DIGITS",
              "LOG_LEVEL", "LOG_FILE"):
    os.environ.pop(_name, None)
os.environ["LOG_COLORS"] = "false"

from bellwave.config.settings import reset_settings  # noqa: E402
from bellwave.core.inequality import STANDARD_ANGLES  # noqa: E402
from bellwave.core.optics import AnalyzerSetting  # noqa: E402
from bellwave.core.source_model import SourceConstraints  # noqa: E402


@pytest.fixture(autouse=True)
def fresh_settings():
    """Rebuild settings from the (test) environment for every test."""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def default_constraints():
    """Degenerate source at the default pump."""
    return SourceConstraints()


@pytest.fixture
def detuned_constraints():
    """Source with beam-1 frequencies split by 1e-7."""
    return SourceConstraints(fractional_detuning=1e-7)


@pytest.fixture
def rng():
    """Seeded counter-based generator."""
    return np.random.Generator(np.random.Philox(12345))


@pytest.fixture
def setting_22_5():
    """theta1 - theta2 = 22.5 degrees."""
    return AnalyzerSetting(math.pi / 8, 0.0)


@pytest.fixture
def standard_angles():
    return STANDARD_ANGLES


@pytest.fixture
def temp_output_dir(tmp_path):
    """Create a temporary output directory."""
    out = tmp_path / "out"
    out.mkdir(parents=True, exist_ok=True)
    return out


@pytest.fixture
def write_config(tmp_path):
    """Write config text to a file and return its path."""

    def _write(text: str, name: str = "source.conf") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
