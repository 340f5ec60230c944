"""Input validators for bellwave."""

import math
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..utils.logger import get_logger


logger = get_logger()

CHSH_COLUMNS = ("a", "a_prime", "b", "b_prime")


class ValidationError(Exception):
    """Raised when validation fails."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        self.message = message
        self.errors = errors or []
        super().__init__(self.message)


def validate_outcome_column(name: str, values: Any) -> Tuple[bool, List[str]]:
    """Validate a single column of ±1 outcomes.

    Args:
        name: Column name (for messages)
        values: Array-like of outcomes

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors = []
    arr = np.asarray(values)

    if arr.ndim != 1:
        errors.append(f"Column '{name}': expected a 1-D sequence, got shape {arr.shape}")
        return False, errors

    if arr.size == 0:
        errors.append(f"Column '{name}': is empty")
        return False, errors

    if not np.issubdtype(arr.dtype, np.number):
        errors.append(f"Column '{name}': non-numeric values")
        return False, errors

    bad = np.flatnonzero((arr != 1) & (arr != -1))
    if bad.size:
        first = int(bad[0])
        errors.append(
            f"Column '{name}': {bad.size} value(s) not in {{-1, +1}}, first at index {first} ({arr[first]!r})"
        )

    return len(errors) == 0, errors


def validate_outcome_columns(
    columns: Mapping[str, Any],
    require_equal_lengths: bool = True,
    required: Sequence[str] = (),
) -> Tuple[bool, List[str]]:
    """Validate a mapping of ±1 outcome columns.

    Args:
        columns: Column name -> values
        require_equal_lengths: Whether all columns must have the same length
        required: Column names that must be present

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors = []

    if not columns:
        errors.append("Dataset has no columns")
        return False, errors

    for name in required:
        if name not in columns:
            errors.append(f"Missing required column: '{name}'")

    lengths = {}
    for name, values in columns.items():
        _, column_errors = validate_outcome_column(name, values)
        errors.extend(column_errors)
        lengths[name] = len(np.asarray(values).reshape(-1))

    if require_equal_lengths and len(set(lengths.values())) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in lengths.items())
        errors.append(f"Columns have unequal lengths: {detail}")

    is_valid = len(errors) == 0
    if not is_valid:
        logger.warning(f"Outcome dataset validation failed: {errors}")
    return is_valid, errors


def validate_angle_quad(angles: Sequence[float]) -> Tuple[bool, List[str]]:
    """Validate a CHSH angle quadruple ``(a, a', b, b')``.

    Args:
        angles: Four analyzer angles in radians

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors = []
    if len(angles) != 4:
        errors.append(f"Expected 4 angles (a, a', b, b'), got {len(angles)}")
        return False, errors
    for label, angle in zip(("a", "a'", "b", "b'"), angles):
        if not math.isfinite(angle):
            errors.append(f"Angle {label} is not finite: {angle}")
    return len(errors) == 0, errors
