"""
File utilities for nonlocal-spectra.

Directory handling, deterministic JSON/CSV writers and content hashing for
run manifests.
"""
import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from ..core.exceptions import OutputError

logger = logging.getLogger(__name__)


def ensure_directory(directory: Union[str, Path], mode: int = 0o755) -> Path:
    """Ensure that a directory exists, creating it if necessary.

    Args:
        directory: Path to the directory.
        mode: Permissions to set on the directory (default: 0o755).

    Returns:
        Path object for the directory.

    Raises:
        OutputError: If the path exists as a file or cannot be created.
    """
    dir_path = Path(directory).expanduser().resolve()

    try:
        dir_path.mkdir(mode=mode, parents=True, exist_ok=True)
    except OSError as e:
        logger.error("Failed to create directory %s: %s", dir_path, e)
        raise OutputError(f"cannot use {dir_path} as output directory: {e}") from e

    return dir_path


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def write_json(file_path: Union[str, Path], payload: Any) -> Path:
    """Write JSON with sorted keys so identical payloads give identical bytes."""
    file_path = Path(file_path)
    ensure_directory(file_path.parent)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    try:
        file_path.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {file_path}: {e}") from e
    return file_path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(
    file_path: Union[str, Path],
    rows: Iterable[Dict[str, Any]],
    columns: Sequence[str],
) -> Path:
    """Write rows as CSV, floats in repr form (round-trip exact).

    Args:
        file_path: Destination.
        rows: One mapping per row.
        columns: Column order; missing keys are written empty.
    """
    file_path = Path(file_path)
    ensure_directory(file_path.parent)
    try:
        with open(file_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(c)) for c in columns])
    except OSError as e:
        raise OutputError(f"cannot write {file_path}: {e}") from e
    return file_path


def read_csv(file_path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(file_path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def get_file_hash(file_path: Union[str, Path], algorithm: str = "sha256", chunk_size: int = 8192) -> str:
    """Calculate the hash of a file.

    Args:
        file_path: Path to the file.
        algorithm: Hash algorithm to use (default: 'sha256').
        chunk_size: Size of chunks to read from the file.

    Returns:
        The file's hash as a hexadecimal string.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the algorithm is not available.
    """
    file_path = Path(file_path).expanduser().resolve()

    if not file_path.is_file():
        raise FileNotFoundError(f"File not found: {file_path}")

    try:
        hash_func = getattr(hashlib, algorithm)()
    except AttributeError:
        raise ValueError(f"Unsupported hash algorithm: {algorithm}")

    with open(file_path, "rb") as f:
        while chunk := f.read(chunk_size):
            hash_func.update(chunk)

    return hash_func.hexdigest()
