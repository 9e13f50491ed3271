"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import filecmp
import itertools
import os
import subprocess
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from conftest import TOY_EPOCHS, TOY_LR, TOY_TOL, random_net, record
from tsxai import analytics, backtest, cli, data, xai
from tsxai.data import dataset_from_arrays
from tsxai.net import NetArchitecture, forward, init_random, predict_series
from tsxai.train import TrainConfig, train_ensemble


def fd_jacobian(f, x, h):
    return np.stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(len(x))])


def rel_err(a, b, floor):
    """Entrywise relative error, ignoring entries of the oracle below ``floor``."""
    mask = np.abs(b) > floor
    return float(np.max(np.abs(a - b)[mask] / np.abs(b)[mask])) if mask.any() else 0.0


def test_criterion_01_derivative_oracles():
    t0 = time.perf_counter()
    worst_fb = worst_fd = 0.0
    for seed in range(60):
        net, x = random_net(seed, max_hidden=4, max_width=20, max_n=8)
        Jf, _ = xai.lpd_forward(net, x)
        Jb = xai.lpd_backward(net, x)
        fd = fd_jacobian(lambda v: forward(net, v).output, x, 1e-5)
        worst_fb = max(worst_fb, float(np.max(np.abs(Jf - Jb))))
        worst_fd = max(worst_fd, rel_err(Jf, fd, 1e-8), rel_err(Jb, fd, 1e-8))
    secs = time.perf_counter() - t0
    ok = worst_fb < 1e-12 and worst_fd < 1e-6 and secs < 30
    record(1, ok, f"60 nets: fwd/bwd max-abs {worst_fb:.2e}, FD rel {worst_fd:.2e}, {secs:.1f}s")
    assert ok


def test_criterion_02_qpd_suite():
    t0 = time.perf_counter()
    worst_sym = worst_fd = worst_ig = 0.0
    for seed in range(60):
        net, x = random_net(seed, max_hidden=4, max_width=20, max_n=8)
        for j in range(net.architecture.n_outputs):
            raw = xai.second_order_raw(net, x, np.eye(net.architecture.n_outputs)[j])
            worst_sym = max(worst_sym, float(np.max(np.abs(raw - raw.T))))
            Q = xai.qpd(net, x, j)
            fd = fd_jacobian(lambda v: xai.lpd_forward(net, v)[0][:, j], x, 1e-5)
            worst_fd = max(worst_fd, rel_err(Q, fd, 1e-8))
            b = lambda v: np.array([xai.lpd_series(net, v[None, :]).intercepts(j)[0]])
            ig = xai.intercept_gradient(Q, x)
            worst_ig = max(worst_ig, float(np.max(np.abs(ig - fd_jacobian(b, x, 1e-5)[:, 0]))))
    secs = time.perf_counter() - t0
    ok = worst_sym < 1e-10 and worst_fd < 1e-5 and worst_ig < 1e-5 and secs < 60
    record(2, ok, f"asym {worst_sym:.2e}, FD rel {worst_fd:.2e}, intercept grad {worst_ig:.2e}, {secs:.1f}s")
    assert ok


def test_criterion_03_linear_replication():
    s = data.log_returns(data.synthetic_prices(1007))
    d = data.build_lagged(s, 6)
    assert len(d) == 1000
    e = train_ensemble(NetArchitecture((6, 10, 1)), d, TrainConfig(0.5, 300), 1)
    net = e.nets[0]
    L = xai.lpd_series(net, d.X, d.timestamps)
    resid = float(np.max(np.abs(predict_series(net, d.X)[:, 0] - L.replicate(d.X))))
    ok = resid < 1e-10
    record(3, ok, f"max |o - (b + w.x)| over 1000 points = {resid:.2e}")
    assert ok


def test_criterion_04_xfunction_consistency():
    exact = True
    worst_sq = worst_sh = worst_proxy = 0.0
    for seed in range(20):
        net, x = random_net(seed)
        n_p = net.architecture.n_outputs
        J = xai.lpd_backward(net, x)
        for j in range(n_p):
            idf = xai.identity_xf(j, n_p)
            exact &= np.array_equal(xai.xf_first_order(net, x, idf), J[:, j])
            exact &= np.array_equal(xai.xf_second_order(net, x, idf), xai.qpd(net, x, j))
        sq = xai.squared_output_xf(0, n_p)
        fd = fd_jacobian(lambda v: np.array([sq.value(forward(net, v).output)]), x, 1e-5)[:, 0]
        worst_sq = max(worst_sq, rel_err(xai.xf_first_order(net, x, sq), fd, 1e-8))
        Hfd = fd_jacobian(lambda v: xai.xf_first_order(net, v, sq), x, 1e-5)
        worst_sq = max(worst_sq, rel_err(xai.xf_second_order(net, x, sq), Hfd, 1e-8))

    rng = np.random.default_rng(0)
    net = init_random(NetArchitecture((4, 6, 1)), 3, bound=1.5)
    X = rng.uniform(size=(80, 4))
    r = rng.standard_normal(80) * 0.01
    sxf = xai.windowed_sharpe_xf(r, 20, 70, center=0.5)
    S = xai.series_sensitivity(net, X, sxf)
    value = lambda Z: sxf.value(predict_series(net, Z)[:, 0])
    for t, i in [(20, 0), (33, 1), (45, 2), (69, 3)]:
        Xp, Xm = X.copy(), X.copy()
        Xp[t, i] += 1e-5
        Xm[t, i] -= 1e-5
        fd = (value(Xp) - value(Xm)) / 2e-5
        worst_sh = max(worst_sh, abs(S[t, i] - fd) / max(abs(fd), 1e-12))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", xai.DiscreteProxyWarning)
            worst_proxy = max(worst_proxy, abs(xai.discrete_proxy(value, X, i, t, 1e-6) - S[t, i]))
    ok = exact and worst_sq < 1e-4 and worst_sh < 1e-4 and worst_proxy < 1e-4
    record(4, ok, f"identity exact={exact}, squared FD rel {worst_sq:.2e}, Sharpe FD rel {worst_sh:.2e}, "
                  f"proxy abs {worst_proxy:.2e}")
    assert ok


def test_criterion_05_indeterminacy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1000)
    d = dataset_from_arrays(x[:, None], x + rng.standard_normal(1000))
    e = train_ensemble(NetArchitecture((1, 1, 1)), d, TrainConfig(TOY_LR, TOY_EPOCHS, TOY_TOL), 10)
    mse = np.array([r.final_mse_original for r in e.reports])
    spread = (mse.max() - mse.min()) / mse.mean()
    dist = [np.linalg.norm(a.parameter_vector() - b.parameter_vector()) for a, b in itertools.combinations(e.nets, 2)]
    secs = time.perf_counter() - t0
    ok = spread < 0.02 and min(dist) > 1 and secs < 120
    record(5, ok, f"MSE {mse.min():.4f}-{mse.max():.4f} (spread {100 * spread:.2f}%), pairwise distance "
                  f"min {min(dist):.3f} max {max(dist):.2f}, {secs:.1f}s")
    assert ok


def test_criterion_06_ipd_fidelity():
    s = data.log_returns(data.synthetic_prices(600))
    d = data.build_lagged(s, 6)
    net = train_ensemble(NetArchitecture((6, 8, 1)), d, TrainConfig(0.5, 300), 1).nets[0]
    ipd = xai.ipd_series(net, d.X, d.y).values
    mse = lambda Z: float(np.mean((predict_series(net, Z)[:, 0] - d.y) ** 2))
    base = mse(d.X)
    rng = np.random.default_rng(1)
    # Perturb along +-sign(IPD): a trained net is near a stationary point, so
    # random-sign directions make the first-order term cancel and the relative
    # error meaningless.
    directions = [np.sign(ipd), -np.sign(ipd)]
    for _ in range(8):
        mask = np.zeros(len(d), dtype=bool)
        mask[rng.choice(len(d), len(d) // 4, replace=False)] = True
        directions.append(np.sign(ipd) * mask[:, None] * rng.choice([-1.0, 1.0]))
    worst = 0.0
    for u in directions:
        dX = 1e-4 * u
        predicted = float(np.sum(ipd * dX))
        actual = mse(d.X + dX) - base
        worst = max(worst, abs(predicted - actual) / abs(actual))
    ok = worst < 1e-3
    record(6, ok, f"worst relative error of first-order MSE change over {len(directions)} perturbations: {worst:.2e}")
    assert ok


def test_criterion_07_signal_suite():
    rng = np.random.default_rng(2)
    prefix_ok = True
    for _ in range(20):
        x = rng.standard_normal(300)
        more = np.concatenate([x, rng.standard_normal(50) * 10])
        prefix_ok &= np.array_equal(analytics.rolling_quantile(x, 50, 1 / 7),
                                    analytics.rolling_quantile(more, 50, 1 / 7)[:300], equal_nan=True)
        prefix_ok &= np.array_equal(analytics.exit_signals(x, 50, 0.1, "two_sided").exposure,
                                    analytics.exit_signals(more, 50, 0.1, "two_sided").exposure[:300])
    freqs = {}
    for q, W in itertools.product((1 / 20, 1 / 7, 0.05), (100, 200)):
        u = rng.uniform(size=10_000)
        sig = analytics.exit_signals(u, W, q, "below", use_absolute=False)
        freqs[(round(q, 4), W)] = float(np.mean(sig.exposure[sig.defined] == 0))
    freq_ok = all(abs(f - q) <= 0.02 for (q, _), f in freqs.items())
    C = rng.standard_normal((2000, 6))
    agg = analytics.aggregate_exposure(C, 200, 0.05)
    ind = [C[:, i] > analytics.rolling_quantile(C[:, i], 200, 0.05) for i in range(6)]
    rational_ok = all(Fraction(agg.exposure[t]) == Fraction(float(Fraction(sum(int(v[t]) for v in ind), 6)))
                      for t in range(200, 2000))
    sig = analytics.exit_signals(rng.standard_normal(2000), 200, 1 / 7, "below")
    rep = analytics.drift_analysis(sig, rng.standard_normal(2000))
    lab = analytics.regimes(sig)
    partition_ok = (sum(rep[k].count for k in ("critical", "neutral", "auspicious")) == rep["all"].count
                    == int(sig.defined.sum()) and np.all((lab != "") == sig.defined))
    ok = bool(prefix_ok and freq_ok and rational_ok and partition_ok)
    worst = max(abs(f - q) for (q, _), f in freqs.items())
    record(7, ok, f"prefix-stable={bool(prefix_ok)}, worst |freq - q| {worst:.4f}, rational={rational_ok}, "
                  f"partition={bool(partition_ok)}")
    assert ok


def _loop(pos, r):
    out, cum = [0.0], 0.0
    for t in range(1, len(r)):
        cum += pos[t - 1] * r[t]
        out.append(cum)
    return np.array(out)


def test_criterion_08_backtest_oracle(tmp_path):
    rng = np.random.default_rng(3)
    r = rng.standard_normal(1000) * 0.02
    f = rng.standard_normal(1000)
    e = np.where(rng.uniform(size=1000) < 0.3, 0.0, rng.uniform(size=1000))
    errs = [
        np.max(np.abs(backtest.sign_rule(f, r).cumulative_log_return - _loop(np.where(f >= 0, 1, -1), r))),
        np.max(np.abs(backtest.exposure_strategy(e, r).cumulative_log_return - _loop(e, r))),
        np.max(np.abs(backtest.long_short_strategy(e, r).cumulative_log_return - _loop(np.where(e == 0, -1, 1), r))),
    ]
    backtest.exposure_strategy(np.ones(1000), r).write_csv(tmp_path / "ones.csv")
    backtest.buy_and_hold(r).write_csv(tmp_path / "bh.csv")
    same = (tmp_path / "ones.csv").read_bytes() == (tmp_path / "bh.csv").read_bytes()
    ok = max(errs) < 1e-12 and same
    record(8, ok, f"max loop deviation {max(errs):.2e}, exposure=1 CSV byte-identical to buy-and-hold: {same}")
    assert ok


def _pipeline(out: Path, jobs: int, subprocess_run: bool = False):
    cfg = str(cli.bundled_config_path())
    for cmd in ("ingest", "train", "explain", "signals", "backtest"):
        args = [cmd, "--config", cfg, "--out", str(out), "--jobs", str(jobs), "--set", "members=3"]
        if subprocess_run:
            code = subprocess.run([sys.executable, "-m", "tsxai.cli", *args], env=dict(os.environ)).returncode
        else:
            code = cli.main(args)
        assert code == 0, cmd


def _tree(root: Path):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file() and p.name != "run_manifest.json")


def test_criterion_09_end_to_end_determinism(tmp_path):
    t0 = time.perf_counter()
    runs = {"a": (1, True), "b": (1, False), "c": (4, False)}
    for name, (jobs, sp) in runs.items():
        _pipeline(tmp_path / name, jobs, sp)
    secs = time.perf_counter() - t0
    files = _tree(tmp_path / "a")
    ok = bool(files) and files == _tree(tmp_path / "b") == _tree(tmp_path / "c")
    diff = []
    for f in files:
        for other in ("b", "c"):
            if not filecmp.cmp(tmp_path / "a" / f, tmp_path / other / f, shallow=False):
                diff.append(f"{other}/{f}")
    ok = ok and not diff and secs < 180
    record(9, ok, f"{len(files)} artifacts, run1 vs run2 vs --jobs 4 differing: {diff or 'none'}, "
                  f"3 pipelines in {secs:.1f}s")
    assert ok


def test_criterion_10_heuristic_summary():
    rng = np.random.default_rng(1)
    X = 0.01 * rng.standard_normal((1000, 6))
    y = 0.1 * X.sum(axis=1) + 0.005 * rng.standard_normal(1000)
    d = dataset_from_arrays(X, y)
    e = train_ensemble(NetArchitecture((6, 10, 1)), d, TrainConfig(2.0, 5000), 5)
    lpds = [xai.lpd_to_original_units(xai.lpd_series(net, d.X), d.scaling_x, d.scaling_y) for net in e.nets]
    b, w = analytics.heuristic_summary(analytics.ensemble_lpd_stats(lpds))
    ok = bool(np.all(np.abs(w - 0.1) <= 0.05))
    record(10, ok, f"time-averaged mean-LPD weights {np.round(w, 4).tolist()}, intercept {b:.2e}")
    assert ok
