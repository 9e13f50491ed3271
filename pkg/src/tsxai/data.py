"""Price ingestion, log-returns, lagged design matrices and unit-interval scaling."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True)
class TimeSeries:
    timestamps: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        if values.ndim != 1 or len(values) != len(self.timestamps):
            raise DataError("timestamps and values must be 1-d and of equal length")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DataError(f"non-finite value at position {bad}")
        for i in range(1, len(self.timestamps)):
            if self.timestamps[i] == self.timestamps[i - 1]:
                raise DataError(f"duplicate timestamp {self.timestamps[i].isoformat()}")
            if self.timestamps[i] < self.timestamps[i - 1]:
                raise DataError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ScalingParams:
    min: float
    max: float

    def __post_init__(self):
        if not (self.max > self.min):
            raise DataError("degenerate range: max must exceed min")

    @property
    def range(self) -> float:
        return self.max - self.min

    def apply(self, v):
        return (np.asarray(v, dtype=float) - self.min) / (self.max - self.min)

    def invert(self, v):
        return np.asarray(v, dtype=float) * (self.max - self.min) + self.min

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(float(d["min"]), float(d["max"]))


@dataclass(frozen=True)
class LaggedDataset:
    """Lagged regression data on the unit-interval scale.

    ``X[t, i]`` holds the lag-(i+1) value of the source series relative to the
    target ``y[t]``; ``X_raw``/``y_raw`` keep the original-scale copies.
    """

    X_raw: np.ndarray
    y_raw: np.ndarray
    timestamps: tuple[dt.date, ...]
    scaling_x: ScalingParams
    scaling_y: ScalingParams
    X: np.ndarray = field(init=False)
    y: np.ndarray = field(init=False)

    def __post_init__(self):
        X_raw = np.array(self.X_raw, dtype=float)
        y_raw = np.array(self.y_raw, dtype=float)
        if X_raw.ndim != 2 or y_raw.ndim != 1 or len(X_raw) != len(y_raw):
            raise DataError("X must be T x n and y length T")
        if len(self.timestamps) != len(y_raw):
            raise DataError("timestamps must align with targets")
        X = self.scaling_x.apply(X_raw)
        y = self.scaling_y.apply(y_raw)
        for a in (X_raw, y_raw, X, y):
            a.setflags(write=False)
        object.__setattr__(self, "X_raw", X_raw)
        object.__setattr__(self, "y_raw", y_raw)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X_raw.shape[1]

    def __len__(self) -> int:
        return len(self.y_raw)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X_raw).tobytes())
        h.update(np.ascontiguousarray(self.y_raw).tobytes())
        h.update(repr((self.scaling_x, self.scaling_y)).encode())
        return h.hexdigest()

    def with_scaling(self, scaling_x: ScalingParams, scaling_y: ScalingParams) -> "LaggedDataset":
        return LaggedDataset(self.X_raw, self.y_raw, self.timestamps, scaling_x, scaling_y)

    def subset(self, rows) -> "LaggedDataset":
        rows = np.asarray(rows)
        ts = tuple(np.asarray(self.timestamps, dtype=object)[rows])
        return LaggedDataset(self.X_raw[rows], self.y_raw[rows], ts, self.scaling_x, self.scaling_y)


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def load_csv(path, column: str = "value", date_column: str = "date") -> TimeSeries:
    """Read a ``date,value`` CSV (ISO dates, header row) into a sorted TimeSeries.

    Extra columns are allowed; ``column`` picks the one to read.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    rows: list[tuple[dt.date, float]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        for name in (date_column, column):
            if name not in reader.fieldnames:
                raise DataError(f"{path}: missing column {name!r}")
        # row 1 is the header
        for lineno, rec in enumerate(reader, start=2):
            try:
                d = _parse_date(rec[date_column])
            except (ValueError, TypeError, AttributeError):
                raise DataError(f"{path}: row {lineno}: bad date {rec[date_column]!r}") from None
            try:
                v = float(rec[column])
            except (ValueError, TypeError):
                raise DataError(f"{path}: row {lineno}: bad value {rec[column]!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {lineno}: non-finite value {rec[column]!r}")
            rows.append((d, v))
    if not rows:
        raise DataError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise DataError(f"{path}: duplicate timestamp {b[0].isoformat()}")
    return TimeSeries(tuple(r[0] for r in rows), np.array([r[1] for r in rows]))


def write_series_csv(s: TimeSeries, path, column: str = "value") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", column])
        for d, v in zip(s.timestamps, s.values):
            w.writerow([d.isoformat(), repr(float(v))])


def log_returns(s: TimeSeries) -> TimeSeries:
    if len(s) < 2:
        raise DataError("need at least two prices for log-returns")
    if np.any(s.values <= 0):
        raise DataError("log-returns require strictly positive prices")
    return TimeSeries(s.timestamps[1:], np.diff(np.log(s.values)))


def scale_unit(v: Sequence[float]) -> tuple[np.ndarray, ScalingParams]:
    v = np.asarray(v, dtype=float)
    lo, hi = float(np.min(v)), float(np.max(v))
    if not hi > lo:
        raise DataError("degenerate range: need at least two distinct values")
    params = ScalingParams(lo, hi)
    return params.apply(v), params


def unscale(v, params: ScalingParams) -> np.ndarray:
    return params.invert(v)


def lag_matrix(values: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (X, y) with ``X[t] = [v[t+n-1], ..., v[t]]`` and ``y[t] = v[t+n]``."""
    values = np.asarray(values, dtype=float)
    T = len(values) - n
    X = np.column_stack([values[n - i : n - i + T] for i in range(1, n + 1)])
    return X, values[n:]


def build_lagged(s: TimeSeries, n: int) -> LaggedDataset:
    if n <= 0 or n >= len(s):
        raise DataError(f"lag count must satisfy 0 < n < {len(s)}, got {n}")
    X, y = lag_matrix(s.values, n)
    _, sx = scale_unit(X.ravel())
    _, sy = scale_unit(y)
    return LaggedDataset(X, y, s.timestamps[n:], sx, sy)


def split(d: LaggedDataset, boundary: dt.date) -> tuple[LaggedDataset, LaggedDataset]:
    """Split at ``boundary``: rows dated on/before it go in-sample.

    Scaling is re-estimated on the in-sample rows and reused out-of-sample;
    out-of-sample values may fall outside [0, 1].
    """
    if isinstance(boundary, str):
        boundary = _parse_date(boundary)
    ts = d.timestamps
    if not (ts[0] <= boundary < ts[-1]):
        raise DataError(
            f"split boundary {boundary.isoformat()} outside ({ts[0].isoformat()}, {ts[-1].isoformat()})"
        )
    k = sum(1 for t in ts if t <= boundary)
    ins = d.subset(np.arange(k))
    _, sx = scale_unit(ins.X_raw.ravel())
    _, sy = scale_unit(ins.y_raw)
    ins = ins.with_scaling(sx, sy)
    outs = d.subset(np.arange(k, len(d))).with_scaling(sx, sy)
    return ins, outs


def write_dataset_csv(path, parts: Sequence[tuple[str, LaggedDataset]]) -> None:
    """Write one or more labelled datasets (original scale) to a single CSV."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        n = parts[0][1].n
        w.writerow(["date", "sample", "y"] + [f"lag_{i}" for i in range(1, n + 1)])
        for label, d in parts:
            for t in range(len(d)):
                w.writerow(
                    [d.timestamps[t].isoformat(), label, repr(float(d.y_raw[t]))]
                    + [repr(float(v)) for v in d.X_raw[t]]
                )


def read_dataset_csv(path, scaling_x: ScalingParams, scaling_y: ScalingParams) -> dict[str, LaggedDataset]:
    groups: dict[str, list] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = len(header) - 3
        for rec in reader:
            groups.setdefault(rec[1], []).append(rec)
    out = {}
    for label, recs in groups.items():
        ts = tuple(_parse_date(r[0]) for r in recs)
        y = np.array([float(r[2]) for r in recs])
        X = np.array([[float(v) for v in r[3 : 3 + n]] for r in recs]).reshape(len(recs), n)
        out[label] = LaggedDataset(X, y, ts, scaling_x, scaling_y)
    return out


def synthetic_prices(T: int = 1500, seed: int = 7, start: dt.date = dt.date(2015, 1, 1)) -> TimeSeries:
    """Deterministic price path whose log-returns follow a weak AR(6) with
    volatility clustering; used for the bundled demo data."""
    rng = np.random.default_rng(seed)
    phi = np.array([0.04, 0.03, 0.03, 0.02, 0.03, 0.06])
    burn = 200
    r = np.zeros(T + burn)
    vol = 0.02
    for t in range(len(phi), len(r)):
        vol = math.sqrt(1e-5 + 0.1 * r[t - 1] ** 2 + 0.85 * vol**2)
        r[t] = 0.0005 + phi @ r[t - len(phi) : t][::-1] + vol * rng.standard_normal()
    r = r[burn:]
    r[0] = 0.0
    prices = 100.0 * np.exp(np.cumsum(r))
    dates = tuple(start + dt.timedelta(days=i) for i in range(T))
    return TimeSeries(dates, prices)


def dataset_from_arrays(X, y, timestamps: Sequence[dt.date] | None = None) -> LaggedDataset:
    """Wrap raw regression arrays, scaling X and y separately to [0, 1]."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if timestamps is None:
        timestamps = tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(len(y)))
    _, sx = scale_unit(X.ravel())
    _, sy = scale_unit(y)
    return LaggedDataset(X, y, tuple(timestamps), sx, sy)
