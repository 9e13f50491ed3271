import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsxai import backtest
from tsxai.backtest import buy_and_hold, exposure_strategy, long_short_strategy, metrics, sign_rule


def loop_account(pos, r, cost=0.0):
    cum, out, prev = 0.0, [0.0], 0.0
    for t in range(1, len(r)):
        cum += pos[t - 1] * r[t] - cost * abs(pos[t - 1] - prev)
        prev = pos[t - 1]
        out.append(cum)
    return np.array(out)


def rand(seed, T=1000):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(T) * 0.01, rng.standard_normal(T)


def test_sign_rule_loop_oracle():
    r, f = rand(0)
    res = sign_rule(f, r)
    pos = [1.0 if v >= 0 else -1.0 for v in f]
    np.testing.assert_allclose(res.cumulative_log_return, loop_account(pos, r), atol=1e-12)
    assert res.cumulative_log_return[0] == 0


def test_sign_rule_special_cases():
    r, _ = rand(1, 50)
    bh = buy_and_hold(r)
    np.testing.assert_array_equal(sign_rule(np.abs(r) + 1, r).cumulative_log_return, bh.cumulative_log_return)
    foresight = np.concatenate([r[1:], [0.0]])
    res = sign_rule(foresight, r)
    assert res.cumulative_log_return[-1] == pytest.approx(np.abs(r[1:]).sum(), abs=1e-15)
    zero = sign_rule(np.zeros(50), r)
    assert np.all(zero.positions == 1)
    assert np.all(sign_rule(np.zeros(50), r, zero="flat").positions == 0)
    with pytest.raises(ValueError):
        sign_rule(r[:-1], r)


@given(st.floats(1e-3, 1e3), st.integers(0, 500))
def test_sign_rule_scale_invariance(c, seed):
    r, f = rand(seed, 80)
    a, b = sign_rule(f, r), sign_rule(c * f, r)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.cumulative_log_return, b.cumulative_log_return)


@given(st.integers(1, 50), st.integers(0, 500))
def test_no_look_ahead(k, seed):
    r, f = rand(seed, 100)
    full = sign_rule(f, r)
    cut = sign_rule(f[:-k], r[:-k])
    np.testing.assert_array_equal(full.positions[: 100 - k], cut.positions)
    np.testing.assert_array_equal(full.cumulative_log_return[: 100 - k], cut.cumulative_log_return)


def test_exposure_and_long_short_loop_oracle():
    r, f = rand(2)
    e = np.random.default_rng(3).uniform(size=1000)
    e[e < 0.3] = 0.0
    np.testing.assert_allclose(exposure_strategy(e, r).cumulative_log_return, loop_account(e, r), atol=1e-12)
    ls = np.where(e == 0, -1.0, 1.0)
    np.testing.assert_allclose(long_short_strategy(e, r).cumulative_log_return, loop_account(ls, r), atol=1e-12)
    np.testing.assert_allclose(exposure_strategy(e, r, cost=0.001).cumulative_log_return,
                               loop_account(e, r, 0.001), atol=1e-12)


def test_exposure_special_cases(tmp_path):
    r, _ = rand(4, 30)
    ones = exposure_strategy(np.ones(30), r)
    ones.write_csv(tmp_path / "a.csv")
    buy_and_hold(r).write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert not np.any(exposure_strategy(np.zeros(30), r).cumulative_log_return)
    alt = exposure_strategy(np.arange(30) % 2 == 1, r)
    assert alt.cumulative_log_return[-1] == pytest.approx(r[2::2].sum(), abs=1e-15)
    np.testing.assert_array_equal(long_short_strategy(np.ones(30), r).cumulative_log_return,
                                  buy_and_hold(r).cumulative_log_return)
    np.testing.assert_array_equal(long_short_strategy(np.zeros(30), r).cumulative_log_return,
                                  -buy_and_hold(r).cumulative_log_return)


@given(st.lists(st.floats(0, 1), min_size=20, max_size=20), st.floats(0.0, 1.0))
def test_exposure_monotone_for_positive_returns(e, bump):
    r = np.linspace(0.001, 0.02, 20)
    e = np.array(e)
    hi = np.minimum(e + bump, 1.0)
    assert np.all(exposure_strategy(hi, r).cumulative_log_return >= exposure_strategy(e, r).cumulative_log_return)


def test_positions_bounded():
    with pytest.raises(ValueError):
        backtest.run_positions([0.5, 2.0], [0.1, 0.1])


def test_metrics_definitions():
    r, f = rand(5, 300)
    res = sign_rule(f, r)
    m = metrics(res, risk_free=0.0001, periods_per_year=252)
    x = res.period_returns[1:] - 0.0001
    mu = sum(x) / len(x)
    sd = math.sqrt(sum((v - mu) ** 2 for v in x) / (len(x) - 1))
    assert m.sharpe == pytest.approx(mu / sd * math.sqrt(252), rel=1e-10)
    c = res.cumulative_log_return
    dd = max(max(c[: t + 1]) - c[t] for t in range(len(c)))
    assert m.max_drawdown == pytest.approx(dd, abs=1e-10)
    assert m.mse == pytest.approx(np.mean((f[:-1] - r[1:]) ** 2))


def test_metrics_flags():
    res = exposure_strategy(np.ones(10), np.full(10, 0.01))
    m = metrics(res)
    assert m.sharpe == math.inf and not m.sharpe_defined
    assert metrics(exposure_strategy(np.zeros(10), np.full(10, 0.01))).sharpe_defined is False
    assert metrics(buy_and_hold(np.linspace(0, 1, 10))).max_drawdown == 0


def test_mean_forecast_rule_is_mean_then_sign():
    r, _ = rand(6, 200)
    rng = np.random.default_rng(7)
    members = [rng.standard_normal(200) for _ in range(5)]
    mean_f = np.mean(members, axis=0)
    res = sign_rule(mean_f, r)
    np.testing.assert_array_equal(res.positions, np.where(mean_f >= 0, 1.0, -1.0))
    avg_perf = np.mean([sign_rule(m, r).cumulative_log_return for m in members], axis=0)
    assert not np.allclose(res.cumulative_log_return, avg_perf)


def test_decision_forecasts_shift():
    np.testing.assert_array_equal(backtest.decision_forecasts([1.0, 2.0, 3.0], 4.0), [2.0, 3.0, 4.0])
