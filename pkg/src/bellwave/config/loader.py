"""Loader for flat ``key = value`` experiment config files.

Lines are parsed with python-dotenv's stream parser, so a malformed line is
reported with its line number. Angles take an optional ``deg``/``rad``
suffix; bare numbers are radians.
"""

import io
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from dotenv.parser import Binding, parse_stream
from pydantic import ValidationError as PydanticValidationError

from ..core.source_model import SourceConstraints
from ..tools.validation import ValidationError
from ..utils.helpers import parse_angle
from ..utils.logger import get_logger


logger = get_logger()

DEFAULT_CONFIG_NAME = "default.conf"


class ConfigError(ValidationError):
    """Config file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}", [f"{prefix}{message}"])


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text, 0)


ANGLE_KEYS = ("const_sum", "delta_2h", "delta_2v", "theta_1h", "theta_1v")
FLOAT_KEYS = ("pump_frequency", "omega_1h", "omega_1v", "detector_distance", "fractional_detuning")
RUN_KEYS = {"seed": "seed", "events": "n_events", "partitions": "n_partitions"}

PARSERS: Dict[str, Callable[[str], Any]] = {
    **{key: parse_angle for key in ANGLE_KEYS},
    **{key: _parse_float for key in FLOAT_KEYS},
    "entangled_source": _parse_bool,
    **{key: _parse_int for key in RUN_KEYS},
}


@dataclass(frozen=True)
class LoadedConfig:
    """Source constraints plus optional run overrides from one config file."""

    constraints: SourceConstraints
    run_overrides: Dict[str, int] = field(default_factory=dict)
    raw: Dict[str, str] = field(default_factory=dict)
    source: Optional[str] = None

    def hash_payload(self) -> Dict[str, Any]:
        return {
            "constraints": self.constraints.model_dump(mode="json"),
            "run": dict(sorted(self.run_overrides.items())),
        }


def _binding_line(binding: Binding) -> int:
    """1-based line of the binding itself; the parser folds preceding blank lines into it."""
    original = binding.original
    leading = original.string[: len(original.string) - len(original.string.lstrip())]
    return original.line + leading.count("\n")


def parse_config_text(text: str, source: Optional[str] = None) -> LoadedConfig:
    """Parse config text into a ``LoadedConfig``.

    Raises:
        ConfigError: On a malformed line, an unknown or repeated key, a bad value,
            or constraints that fail model validation
    """
    values: Dict[str, Any] = {}
    raw: Dict[str, str] = {}
    lines: Dict[str, int] = {}

    for binding in parse_stream(io.StringIO(text)):
        line = _binding_line(binding)
        if binding.error:
            raise ConfigError(f"cannot parse {binding.original.string.strip()!r}", line)
        if binding.key is None:
            continue  # blank line or comment
        key = binding.key.strip().lower()
        if key not in PARSERS:
            raise ConfigError(f"unknown key '{key}'", line)
        if key in values:
            raise ConfigError(f"key '{key}' repeated (first on line {lines[key]})", line)
        if binding.value is None or not binding.value.strip():
            raise ConfigError(f"key '{key}' has no value", line)
        try:
            values[key] = PARSERS[key](binding.value.strip())
        except ValueError as e:
            raise ConfigError(f"bad value for '{key}': {e}", line) from e
        raw[key] = binding.value.strip()
        lines[key] = line

    if ("omega_1h" in values) != ("omega_1v" in values):
        present = "omega_1h" if "omega_1h" in values else "omega_1v"
        raise ConfigError("omega_1h and omega_1v must be given together", lines[present])

    fields: Dict[str, Any] = {
        key: values[key]
        for key in ("const_sum", "delta_2h", "delta_2v", "pump_frequency", "detector_distance",
                    "fractional_detuning", "entangled_source")
        if key in values
    }
    if "theta_1h" in values or "theta_1v" in values:
        fields["beam1_phases"] = (values.get("theta_1h", 0.0), values.get("theta_1v", 0.0))
    if "omega_1h" in values:
        fields["beam1_frequencies"] = (values["omega_1h"], values["omega_1v"])

    try:
        constraints = SourceConstraints(**fields)
    except PydanticValidationError as e:
        details = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid source constraints: {details}") from e

    overrides = {RUN_KEYS[key]: values[key] for key in RUN_KEYS if key in values}
    logger.debug(f"Loaded config {source or '<text>'}: {sorted(raw)}")
    return LoadedConfig(constraints, overrides, raw, source)


def load_config(path: str | Path) -> LoadedConfig:
    """Read and parse a config file.

    Raises:
        OSError: If the file cannot be read
        ConfigError: If the content is malformed
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config_text(text, source=str(path))


def load_default_config() -> LoadedConfig:
    """The shipped default config."""
    text = (files("bellwave.config") / DEFAULT_CONFIG_NAME).read_text(encoding="utf-8")
    return parse_config_text(text, source=DEFAULT_CONFIG_NAME)
