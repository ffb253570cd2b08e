from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import ujson

FAILED_MARKER = "FAILED"


def jsonable(obj):
    """numpy scalars and arrays to plain Python; non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(ujson.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return ujson.loads(Path(path).read_text(encoding="utf-8"))


def write_failed_marker(directory: Path, errors: dict[str, str]) -> None:
    lines = [f"{task}: {message}" for task, message in sorted(errors.items())]
    (directory / FAILED_MARKER).write_text("\n".join(lines) + "\n", encoding="utf-8")


def clear_failed_marker(directory: Path) -> None:
    (directory / FAILED_MARKER).unlink(missing_ok=True)
