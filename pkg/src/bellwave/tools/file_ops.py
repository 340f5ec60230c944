"""File output for bellwave: atomic writes, CSV and JSON emission, dataset CSV I/O."""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..core.inequality import DatasetError, OutcomeDataset, Provenance
from ..utils.helpers import ensure_directory, format_float
from ..utils.logger import get_logger


logger = get_logger()


def header_comment(command: str, seed: Optional[int], config_hash: str) -> str:
    """First line of every emitted CSV (without the trailing newline)."""
    seed_text = "none" if seed is None else str(seed)
    return f"# bellwave {command} seed={seed_text} config_hash={config_hash}"


def atomic_write_text(file_path: str | Path, content: str, encoding: str = "utf-8") -> Path:
    """Write ``content`` to a temporary sibling and rename it into place.

    Raises:
        OSError: If the directory or file cannot be written; no partial file remains
    """
    path = Path(file_path)
    ensure_directory(path.parent)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="") as f:
            f.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        logger.error(f"Failed to write file {file_path}")
        raise
    logger.debug(f"Wrote file: {file_path} ({len(content)} bytes)")
    return path


def _cell(value: Any, digits: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value), digits)
    return "" if value is None else str(value)


def csv_text(
    header: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    digits: int = 17,
) -> str:
    """Render a CSV document: comment line, column names, rows; LF endings."""
    buffer = io.StringIO()
    buffer.write(header + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v, digits) for v in row])
    return buffer.getvalue()


def json_text(data: Dict[str, Any]) -> str:
    """Sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_dataset_csv(file_path: str | Path, dataset: OutcomeDataset, header: str) -> Path:
    """Write a +/-1 dataset as CSV, one column per label."""
    names = list(dataset.columns)
    rows = zip(*(dataset.columns[name].tolist() for name in names))
    return atomic_write_text(file_path, csv_text(header, names, rows))


def parse_dataset_csv(text: str, source: str = "<text>") -> OutcomeDataset:
    """Parse a +/-1 dataset from CSV text.

    Lines starting with ``#`` are skipped; the first remaining row names the
    columns. Row numbers in errors are file line numbers.

    Raises:
        DatasetError: On a missing header, a short or long row, or a value other than 1/-1
    """
    reader = csv.reader(io.StringIO(text))
    names: Optional[List[str]] = None
    values: Dict[str, List[int]] = {}

    for row in reader:
        line = reader.line_num
        if not row or row[0].lstrip().startswith("#"):
            continue
        if names is None:
            names = [cell.strip() for cell in row]
            if len(set(names)) != len(names) or not all(names):
                raise DatasetError(f"{source}: invalid header at row {line}: {row}", row=line)
            values = {name: [] for name in names}
            continue
        if len(row) != len(names):
            raise DatasetError(
                f"{source}: row {line} has {len(row)} value(s), expected {len(names)}", row=line
            )
        for name, cell in zip(names, row):
            cell = cell.strip()
            if cell in ("1", "+1"):
                values[name].append(1)
            elif cell == "-1":
                values[name].append(-1)
            else:
                raise DatasetError(
                    f"{source}: row {line}, column '{name}': {cell!r} is not +1 or -1",
                    row=line,
                    column=name,
                )

    if names is None:
        raise DatasetError(f"{source}: no header row")
    if not any(values.values()):
        raise DatasetError(f"{source}: no data rows")
    return OutcomeDataset({name: np.array(v, dtype=np.int8) for name, v in values.items()},
                          Provenance.EXTERNAL)


def read_dataset_csv(file_path: str | Path) -> OutcomeDataset:
    """Read a +/-1 dataset CSV.

    Raises:
        OSError: If the file cannot be read
        DatasetError: If the content is malformed
    """
    path = Path(file_path)
    text = path.read_text(encoding="utf-8")
    dataset = parse_dataset_csv(text, source=str(path))
    logger.debug(f"Read dataset {path}: {len(dataset)} rows, columns {list(dataset.columns)}")
    return dataset
