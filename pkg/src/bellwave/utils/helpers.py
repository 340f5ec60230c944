"""Utility functions for bellwave."""

import hashlib
import json
import math
import re
from pathlib import Path
from typing import Any, Dict, Iterator, List, Tuple

_ANGLE_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(deg|rad)?\s*$")


def ensure_directory(path: str | Path) -> Path:
    """Ensure a directory exists, creating it if necessary.

    Args:
        path: Directory path

    Returns:
        Path object for the directory
    """
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def parse_angle(text: str) -> float:
    """Parse an angle with an optional ``deg``/``rad`` suffix into radians.

    Bare numbers are radians.

    Args:
        text: e.g. ``"22.5deg"``, ``"0.3927rad"``, ``"0.3927"``

    Returns:
        Angle in radians

    Raises:
        ValueError: If the text is not a finite angle
    """
    match = _ANGLE_PATTERN.match(text)
    if not match:
        raise ValueError(f"Not an angle: {text!r} (expected a number with optional deg/rad suffix)")
    value = float(match.group(1))
    if not math.isfinite(value):
        raise ValueError(f"Angle must be finite: {text!r}")
    if match.group(2) == "deg":
        return math.radians(value)
    return value


def parse_angle_list(text: str) -> List[float]:
    """Parse a comma-separated list of angles (see ``parse_angle``)."""
    return [parse_angle(part) for part in text.split(",") if part.strip()]


def format_float(value: float, digits: int = 17) -> str:
    """Format a float for CSV output; 17 significant digits round-trip exactly."""
    return format(float(value), f".{digits}g")


def config_hash(config: Dict[str, Any]) -> str:
    """Hash a configuration mapping.

    Args:
        config: JSON-serializable mapping

    Returns:
        First 16 hex digits of SHA-256 over the canonical JSON
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def iter_chunks(total: int, chunk_size: int) -> Iterator[Tuple[int, int]]:
    """Yield ``(start, size)`` pairs covering ``total`` items in fixed-size chunks.

    Args:
        total: Number of items
        chunk_size: Size of every chunk but possibly the last

    Returns:
        Iterator over chunk bounds
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    for start in range(0, total, chunk_size):
        yield start, min(chunk_size, total - start)
