"""Deterministic CSV/JSON writers shared by the artifact producers."""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(v) -> str:
    """Shortest round-trip text for a number; dates as ISO strings."""
    if isinstance(v, (dt.date, dt.datetime)):
        return v.isoformat()
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def write_matrix(path, timestamps: Sequence[dt.date], columns: Sequence[str], M: np.ndarray,
                 extra: dict[str, Sequence] | None = None) -> Path:
    """``date`` + optional extra columns + one column per matrix column."""
    M = np.asarray(M, dtype=float)
    extra = extra or {}
    header = ["date", *extra.keys(), *columns]
    rows = ([timestamps[t], *(v[t] for v in extra.values()), *M[t]] for t in range(len(M)))
    return write_rows(path, header, rows)


def read_matrix(path) -> tuple[list[str], list[dt.date], dict[str, list[str]], np.ndarray]:
    """Inverse of :func:`write_matrix` for numeric columns.

    Columns whose values do not parse as floats are returned as text.
    """
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        recs = list(reader)
    dates = [dt.date.fromisoformat(r[0]) for r in recs]
    text: dict[str, list[str]] = {}
    num_cols, num_idx = [], []
    for j, name in enumerate(header[1:], start=1):
        try:
            [float(r[j]) for r in recs[:1]]
            num_cols.append(name)
            num_idx.append(j)
        except ValueError:
            text[name] = [r[j] for r in recs]
    M = np.array([[float(r[j]) for j in num_idx] for r in recs], dtype=float).reshape(len(recs), len(num_idx))
    return num_cols, dates, text, M


def json_safe(obj):
    """Replace non-finite floats by None, recursively."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (dt.date, dt.datetime)):
        return obj.isoformat()
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_safe(obj), indent=1, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path
