"""
Result writers
CSV: '#' metadata lines, a header row, 17 significant digits and '\n' line
endings. JSON: sorted keys with a top-level "meta" object. Given the same
computation both formats are byte-stable across runs and platforms.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], meta: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={json.dumps(jsonable(meta[key]), sort_keys=True, separators=(',', ':'))}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def write_json(path: Path, payload: Mapping[str, Any], meta: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"meta": jsonable(dict(meta))}
    document.update(jsonable(dict(payload)))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(json.dumps(document, sort_keys=True, indent=2, allow_nan=False))
        fh.write("\n")
    return path


def read_csv(path: Path):
    """(meta, header, rows) of a file written by ``write_csv``; values stay strings."""
    meta: Dict[str, Any] = {}
    lines: List[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, raw = line[2:].rstrip("\n").partition("=")
                meta[key] = json.loads(raw)
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return meta, header, [row for row in reader]
