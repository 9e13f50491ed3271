"""Ensemble statistics on LPD series, rolling-quantile signals and drift tables."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import io
from .xai import LpdSeries, lpd_columns

BELOW, ABOVE, TWO_SIDED = "below", "above", "two_sided"
SIDES = (BELOW, ABOVE, TWO_SIDED)
REGIMES = ("critical", "neutral", "auspicious", "all")


def _stack(lpds, j: int = 0) -> np.ndarray:
    mats = [m.matrices[j] if isinstance(m, LpdSeries) else np.asarray(m, dtype=float) for m in lpds]
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise ValueError(f"member LPD shapes differ: {sorted(shapes)}")
    return np.stack(mats)


@dataclass(frozen=True)
class EnsembleLpdStats:
    """Cross-member mean, standard deviation (divisor M) and their ratio.

    ``tstat`` is NaN wherever ``sigma`` is zero.
    """

    mean: np.ndarray
    sigma: np.ndarray
    tstat: np.ndarray
    timestamps: tuple[dt.date, ...] = ()

    @property
    def undefined(self) -> np.ndarray:
        return self.sigma == 0

    def write_csv(self, directory, columns: Sequence[str] | None = None) -> list:
        cols = list(columns) if columns is not None else lpd_columns(self.mean.shape[1] - 1)
        return [io.write_matrix(f"{directory}/{name}.csv", self.timestamps, cols, getattr(self, name))
                for name in ("mean", "sigma", "tstat")]


def ensemble_lpd_stats(lpds, j: int = 0) -> EnsembleLpdStats:
    S = _stack(lpds, j)
    if len(S) < 2:
        raise ValueError("need at least 2 members")
    mean = S.mean(axis=0)
    sigma = np.sqrt(np.mean((S - mean) ** 2, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(sigma > 0, mean / np.where(sigma > 0, sigma, 1.0), np.nan)
    ts = lpds[0].timestamps if isinstance(lpds[0], LpdSeries) else ()
    return EnsembleLpdStats(mean, sigma, tstat, tuple(ts))


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    va, vb = float(np.sum(da * da)), float(np.sum(db * db))
    if va == 0 or vb == 0:
        return math.nan
    return float(np.sum(da * db) / math.sqrt(va * vb))


@dataclass(frozen=True)
class CrossCorrelations:
    """``mean_vs_reference[i]``: corr over time of mean-LPD of input i with the
    reference input; ``member_vs_mean[i]``: average over members of corr(member, mean).
    NaN marks zero-variance columns."""

    reference: int
    mean_vs_reference: np.ndarray
    member_vs_mean: np.ndarray

    def rows(self):
        n = len(self.mean_vs_reference)
        return [["mean_vs_reference", *self.mean_vs_reference], ["member_vs_mean", *self.member_vs_mean]], [
            f"lag_{i}" for i in range(1, n + 1)
        ]


def lpd_cross_correlations(lpds, reference: int = 0, j: int = 0) -> CrossCorrelations:
    """Correlation diagnostics on the sensitivity columns (intercept excluded).

    ``reference`` indexes the inputs from 0 (lag-1 by default).
    """
    S = _stack(lpds, j)[:, :, 1:]
    if S.shape[1] < 3:
        raise ValueError("need at least 3 time points")
    mean = S.mean(axis=0)
    n = mean.shape[1]
    if not 0 <= reference < n:
        raise ValueError(f"reference index must be in 0..{n - 1}")
    row1 = np.array([_corr(mean[:, i], mean[:, reference]) for i in range(n)])
    row2 = np.array([np.mean([_corr(S[m, :, i], mean[:, i]) for m in range(len(S))]) for i in range(n)])
    return CrossCorrelations(reference, row1, row2)


def _rank(q: float, W: int) -> int:
    # ceil(q*W) with a guard so that e.g. 0.05*100 = 5.000000000000001 stays 5
    return max(1, min(W, math.ceil(q * W - 1e-9)))


def rolling_quantile(series: Sequence[float], window: int, q: float) -> np.ndarray:
    """Empirical q-quantile of the ``window`` values strictly before each t.

    The quantile is the order statistic of rank ``ceil(q * window)``.  The
    first ``window`` entries have no full history and are NaN.
    """
    x = np.asarray(series, dtype=float)
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if window < 2:
        raise ValueError("window must be >= 2")
    if window >= len(x):
        raise ValueError(f"window {window} must be shorter than the series ({len(x)})")
    k = _rank(q, window) - 1
    out = np.full(len(x), np.nan)
    wins = sliding_window_view(x[:-1], window)
    out[window:] = np.partition(wins, k, axis=1)[:, k]
    return out


@dataclass(frozen=True)
class SignalSeries:
    timestamps: tuple[dt.date, ...]
    exposure: np.ndarray
    trigger_kind: str
    defined: np.ndarray
    values: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.exposure, dtype=float)
        if np.any(e < 0) or np.any(e > 1):
            raise ValueError("exposure must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.exposure)

    @property
    def critical(self) -> np.ndarray:
        return self.defined & (self.exposure == 0)

    def write_csv(self, path) -> object:
        T = len(self)
        nan = np.full(T, np.nan)
        v = self.values if self.values is not None else nan
        lo = self.lower if self.lower is not None else nan
        hi = self.upper if self.upper is not None else nan
        rows = ([self.timestamps[t], self.exposure[t], bool(self.defined[t]), v[t], lo[t], hi[t],
                 bool(self.defined[t] and v[t] < lo[t]), bool(self.defined[t] and v[t] > hi[t])] for t in range(T))
        return io.write_rows(path, ["date", "exposure", "defined", "value", "lower", "upper",
                                    "below_lower", "above_upper"], rows)


def _dates(T: int, timestamps) -> tuple:
    if timestamps is None:
        return tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(T))
    if len(timestamps) != T:
        raise ValueError("timestamps must align with the series")
    return tuple(timestamps)


def exit_signals(
    lpd_column: Sequence[float],
    window: int,
    q: float,
    side: str = BELOW,
    use_absolute: bool = True,
    timestamps: Sequence[dt.date] | None = None,
) -> SignalSeries:
    """Zero exposure when the (absolute) sensitivity leaves its rolling band.

    ``below`` compares with the q-quantile, ``above`` with the (1-q)-quantile,
    ``two_sided`` with both.  Warm-up points are fully invested.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    x = np.asarray(lpd_column, dtype=float)
    v = np.abs(x) if use_absolute else x
    lower = rolling_quantile(v, window, q)
    upper = rolling_quantile(v, window, 1.0 - q)
    defined = ~np.isnan(lower)
    with np.errstate(invalid="ignore"):
        lo_hit = defined & (v < lower)
        hi_hit = defined & (v > upper)
    hit = {BELOW: lo_hit, ABOVE: hi_hit, TWO_SIDED: lo_hit | hi_hit}[side]
    exposure = np.where(hit, 0.0, 1.0)
    return SignalSeries(_dates(len(x), timestamps), exposure, side, defined, v, lower, upper)


def aggregate_exposure(
    lpd_columns_: np.ndarray, window: int, q: float, timestamps: Sequence[dt.date] | None = None
) -> SignalSeries:
    """Exposure = share of columns above their own rolling q-quantile."""
    C = np.asarray(lpd_columns_, dtype=float)
    if C.ndim != 2:
        raise ValueError("expected a T x m matrix of aligned columns")
    T, m = C.shape
    count = np.zeros(T, dtype=int)
    defined = np.ones(T, dtype=bool)
    for i in range(m):
        qi = rolling_quantile(C[:, i], window, q)
        d = ~np.isnan(qi)
        defined &= d
        with np.errstate(invalid="ignore"):
            count += d & (C[:, i] > qi)
    exposure = np.where(defined, count / m, 1.0)
    return SignalSeries(_dates(T, timestamps), exposure, "aggregate", defined)


@dataclass(frozen=True)
class DriftRow:
    regime: str
    count: int
    proportion_positive: float  # percent
    average_next_return: float  # percent

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class DriftReport:
    rows: tuple[DriftRow, ...]

    def __getitem__(self, regime: str) -> DriftRow:
        for r in self.rows:
            if r.regime == regime:
                return r
        raise KeyError(regime)

    def write_csv(self, path):
        return io.write_rows(path, ["regime", "count", "proportion_positive_pct", "average_next_return_pct"],
                             ([r.regime, r.count, r.proportion_positive, r.average_next_return] for r in self.rows))


def regimes(sig: SignalSeries) -> np.ndarray:
    """Label each defined point critical (below the lower band), auspicious
    (above the upper band) or neutral; warm-up points get ''."""
    if sig.values is None or sig.lower is None or sig.upper is None:
        raise ValueError("drift analysis needs both quantile bounds")
    lab = np.full(len(sig), "", dtype=object)
    d = sig.defined
    with np.errstate(invalid="ignore"):
        crit = d & (sig.values < sig.lower)
        ausp = d & ~crit & (sig.values > sig.upper)
    lab[d] = "neutral"
    lab[crit] = "critical"
    lab[ausp] = "auspicious"
    return lab


def drift_analysis(sig: SignalSeries, next_returns: Sequence[float]) -> DriftReport:
    """``next_returns[t]`` is the return realized after decision time t.

    NaN entries of ``next_returns`` (e.g. the last point) are left out.
    """
    r = np.asarray(next_returns, dtype=float)
    if len(r) != len(sig):
        raise ValueError("returns must align with the signal series")
    lab = regimes(sig)
    ok = ~np.isnan(r)
    rows = []
    for name in REGIMES:
        sel = ok & ((lab != "") if name == "all" else (lab == name))
        n = int(sel.sum())
        if n == 0:
            rows.append(DriftRow(name, 0, math.nan, math.nan))
        else:
            rows.append(DriftRow(name, n, 100.0 * float(np.mean(r[sel] > 0)), 100.0 * float(np.mean(r[sel]))))
    return DriftReport(tuple(rows))


def heuristic_summary(stats: EnsembleLpdStats) -> tuple[float, np.ndarray]:
    """Time-averaged mean-LPD: consensus intercept and per-input weights."""
    m = np.asarray(stats.mean)
    if m.size == 0:
        raise ValueError("empty statistics")
    avg = m.mean(axis=0)
    return float(avg[0]), avg[1:]


@dataclass(frozen=True)
class SignalPreset:
    name: str
    q: float
    window: int
    side: str = BELOW
    use_absolute: bool = True
    column: str = "last_lag"  # "intercept", "last_lag" or "lag_<i>"
    rule: str = "exit"  # or "aggregate"


PRESETS = {
    "btc-rm": SignalPreset("btc-rm", 1 / 7, 100, BELOW, True, "last_lag"),
    "fraud": SignalPreset("fraud", 1 / 20, 250, TWO_SIDED, True, "last_lag"),
    "sp-crisis": SignalPreset("sp-crisis", 0.05, 200, BELOW, True, "intercept"),
    "sp-aggregate": SignalPreset("sp-aggregate", 0.05, 200, BELOW, False, "all", "aggregate"),
}


def column_index(column: str, n: int) -> int:
    """Position of a named column in an LPD matrix (0 = intercept)."""
    if column == "intercept":
        return 0
    if column == "last_lag":
        return n
    if column.startswith("lag_"):
        i = int(column[4:])
        if 1 <= i <= n:
            return i
    raise ValueError(f"unknown LPD column {column!r}")
