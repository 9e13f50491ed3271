"""Strategy accounting: a position decided at t earns the return of t+1.

All series are indexed by decision time.  ``cumulative[0]`` is 0 and
``cumulative[t] = sum_{s=1..t} (position[s-1] * returns[s] - cost terms)``,
so the last position never earns anything inside the sample.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import io

LONG, FLAT = "long", "flat"


@dataclass(frozen=True)
class BacktestResult:
    timestamps: tuple[dt.date, ...]
    positions: np.ndarray
    returns: np.ndarray
    period_returns: np.ndarray  # strategy return accrued at t (0 at t = 0)
    cumulative_log_return: np.ndarray
    mse_out: float = math.nan

    def __len__(self) -> int:
        return len(self.positions)

    def write_csv(self, path):
        rows = ([self.timestamps[t], self.positions[t], self.returns[t], self.period_returns[t],
                 self.cumulative_log_return[t]] for t in range(len(self)))
        return io.write_rows(path, ["date", "position", "return", "period_return", "cumulative"], rows)


def _dates(T: int, timestamps) -> tuple:
    if timestamps is None:
        return tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(T))
    if len(timestamps) != T:
        raise ValueError("timestamps must align with returns")
    return tuple(timestamps)


def run_positions(
    positions: Sequence[float],
    returns: Sequence[float],
    timestamps: Sequence[dt.date] | None = None,
    cost: float = 0.0,
    mse_out: float = math.nan,
) -> BacktestResult:
    """Accrue ``positions[t-1] * returns[t]`` minus ``cost * |change of position|``."""
    pos = np.asarray(positions, dtype=float)
    r = np.asarray(returns, dtype=float)
    if pos.shape != r.shape or pos.ndim != 1:
        raise ValueError(f"length mismatch: {pos.shape} positions vs {r.shape} returns")
    if len(r) == 0:
        raise ValueError("empty series")
    if np.any(np.abs(pos) > 1):
        raise ValueError("positions must lie in [-1, 1]")
    pnl = np.zeros(len(r))
    pnl[1:] = pos[:-1] * r[1:]
    if cost:
        prev = np.concatenate([[0.0], pos[:-2]])
        pnl[1:] -= cost * np.abs(pos[:-1] - prev)
    return BacktestResult(_dates(len(r), timestamps), pos, r, pnl, np.cumsum(pnl), mse_out)


def sign_positions(forecasts, center: float = 0.0, zero: str = LONG) -> np.ndarray:
    f = np.asarray(forecasts, dtype=float) - center
    pos = np.sign(f)
    pos[f == 0] = 1.0 if zero == LONG else 0.0
    return pos


def sign_rule(
    forecasts: Sequence[float],
    returns: Sequence[float],
    timestamps: Sequence[dt.date] | None = None,
    center: float = 0.0,
    zero: str = LONG,
    cost: float = 0.0,
) -> BacktestResult:
    """Hold ``sign(forecast_t - center)`` over the next period.

    ``forecasts[t]`` predicts ``returns[t+1]``; ``mse_out`` compares the two.
    """
    f = np.asarray(forecasts, dtype=float)
    r = np.asarray(returns, dtype=float)
    if f.shape != r.shape:
        raise ValueError(f"length mismatch: {f.shape} forecasts vs {r.shape} returns")
    mse = float(np.mean((f[:-1] - r[1:]) ** 2)) if len(r) > 1 else math.nan
    return run_positions(sign_positions(f, center, zero), r, timestamps, cost, mse)


def _exposure(signals) -> np.ndarray:
    return np.asarray(getattr(signals, "exposure", signals), dtype=float)


def exposure_strategy(signals, returns, timestamps=None, cost: float = 0.0) -> BacktestResult:
    """Invest the fraction ``exposure_t`` (a SignalSeries or plain array)."""
    if timestamps is None:
        timestamps = getattr(signals, "timestamps", None)
    return run_positions(_exposure(signals), returns, timestamps, cost)


def long_short_strategy(signals, returns, timestamps=None, cost: float = 0.0) -> BacktestResult:
    """Short at critical points (zero exposure), long otherwise."""
    if timestamps is None:
        timestamps = getattr(signals, "timestamps", None)
    e = _exposure(signals)
    return run_positions(np.where(e == 0, -1.0, 1.0), returns, timestamps, cost)


def buy_and_hold(returns, timestamps=None) -> BacktestResult:
    return run_positions(np.ones(len(returns)), returns, timestamps)


@dataclass(frozen=True)
class Metrics:
    sharpe: float
    max_drawdown: float
    mse: float
    sharpe_defined: bool

    def to_dict(self) -> dict:
        return {"sharpe": self.sharpe, "max_drawdown": self.max_drawdown, "mse": self.mse,
                "sharpe_defined": self.sharpe_defined}


def max_drawdown(cumulative: Sequence[float]) -> float:
    c = np.asarray(cumulative, dtype=float)
    return float(np.max(np.maximum.accumulate(c) - c)) if len(c) else 0.0


def sharpe_ratio(period_returns, risk_free: float = 0.0, periods_per_year: float = 365) -> tuple[float, bool]:
    """Annualized mean/std (ddof 1) of excess returns and whether it is defined.

    A zero standard deviation yields +-inf (or NaN for a zero mean) flagged as undefined.
    """
    x = np.asarray(period_returns, dtype=float) - risk_free
    if len(x) < 2:
        return math.nan, False
    m, sd = float(np.mean(x)), float(np.std(x, ddof=1))
    if sd == 0:
        return (math.copysign(math.inf, m) if m != 0 else math.nan), False
    return m / sd * math.sqrt(periods_per_year), True


def metrics(result: BacktestResult, risk_free: float = 0.0, periods_per_year: float = 365) -> Metrics:
    if len(result) == 0:
        raise ValueError("empty result")
    sh, ok = sharpe_ratio(result.period_returns[1:], risk_free, periods_per_year)
    return Metrics(sh, max_drawdown(result.cumulative_log_return), result.mse_out, ok)


def decision_forecasts(row_forecasts, next_forecast: float) -> np.ndarray:
    """Shift row-indexed forecasts to decision time.

    Row t's forecast uses inputs known at t-1, so it becomes the decision at
    t-1; ``next_forecast`` fills the final decision.
    """
    o = np.asarray(row_forecasts, dtype=float)
    return np.concatenate([o[1:], [next_forecast]])


def sign_rule_sharpe(net, d, periods_per_year: float = 365) -> float:
    """Sharpe ratio of the sign rule of ``net`` on dataset ``d`` (original units)."""
    from .net import predict_series

    o = d.scaling_y.invert(predict_series(net, d.X)[:, 0])
    nxt = np.concatenate([[d.y_raw[-1]], d.X_raw[-1, :-1]])
    o_next = float(d.scaling_y.invert(predict_series(net, d.scaling_x.apply(nxt)[None, :])[0, 0]))
    res = sign_rule(decision_forecasts(o, o_next), d.y_raw, d.timestamps)
    return metrics(res, periods_per_year=periods_per_year).sharpe
