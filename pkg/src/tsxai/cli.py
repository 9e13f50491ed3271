"""Command-line pipeline: ingest -> train -> explain -> signals -> backtest -> report.

Every subcommand reads a flat TOML config (``--config``), applies ``--set
key=value`` overrides and writes plain CSV/JSON artifacts below the output
directory.  ``run_manifest.json`` records hashes and timings per command.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analytics, backtest, data, io, train, xai
from .net import NetArchitecture, predict_series

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger("tsxai")

ENV_OUTPUT = "TSXAI_OUTPUT_DIR"
EXPLAIN_KINDS = ("lpd", "qpd", "ipd", "layer", "xf")
STRATEGIES = ("sign_rule", "exposure", "long_short")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS: dict = {
    "data": "",  # empty: bundled synthetic prices
    "column": "value",
    "date_column": "date",
    "transform": "log_returns",  # or "none"
    "lags": 6,
    "split_date": "",  # empty: two thirds of the rows in-sample
    "hidden": [10],
    "output_activation": "sigmoid",
    "learning_rate": 0.5,
    "max_epochs": 5000,
    "tolerance": 1e-8,
    "seed": 0,
    "members": 3,
    "explain": ["lpd", "qpd", "ipd"],
    "explain_layer": 1,
    "explain_xf": "squared",
    "qpd_full": False,
    "preset": "btc-rm",
    "signal_q": None,
    "signal_window": None,
    "signal_side": None,
    "signal_absolute": None,
    "signal_column": None,
    "signal_rule": None,
    "strategy": "exposure",
    "periods_per_year": 365,
    "risk_free": 0.0,
    "cost": 0.0,
    "output_dir": "",
}
# keys that only affect where/how fast things run, not what is computed
_RUNTIME_KEYS = {"output_dir"}


class UsageError(Exception):
    pass


class MissingArtifacts(data.DataError):
    def __init__(self, paths):
        super().__init__("missing artifacts (run the earlier steps first): " + ", ".join(str(p) for p in paths))


# -- config ------------------------------------------------------------------


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path=None, overrides=()) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
        base = Path(path).resolve().parent
        for k, v in doc.items():
            if k not in DEFAULTS:
                raise UsageError(f"{path}: unknown config key {k!r}")
            if k == "data" and v:
                v = str((base / v).resolve()) if not Path(v).is_absolute() else v
            cfg[k] = v
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k not in DEFAULTS:
            raise UsageError(f"unknown config key {k!r}")
        cfg[k] = _parse_value(v.strip())
    if isinstance(cfg["hidden"], int):
        cfg["hidden"] = [cfg["hidden"]]
    if isinstance(cfg["explain"], str):
        cfg["explain"] = [cfg["explain"]]
    for kind in cfg["explain"]:
        if kind not in EXPLAIN_KINDS:
            raise UsageError(f"unknown explain kind {kind!r} (choose from {', '.join(EXPLAIN_KINDS)})")
    if cfg["strategy"] not in STRATEGIES:
        raise UsageError(f"unknown strategy {cfg['strategy']!r}")
    if cfg["preset"] not in analytics.PRESETS:
        raise UsageError(f"unknown preset {cfg['preset']!r} (choose from {', '.join(analytics.PRESETS)})")
    if int(cfg["members"]) < 1:
        raise UsageError("members must be >= 1")
    return cfg


def config_hash(cfg: dict) -> str:
    doc = {k: v for k, v in cfg.items() if k not in _RUNTIME_KEYS}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def signal_preset(cfg: dict) -> analytics.SignalPreset:
    p = analytics.PRESETS[cfg["preset"]]
    return analytics.SignalPreset(
        p.name,
        float(cfg["signal_q"]) if cfg["signal_q"] is not None else p.q,
        int(cfg["signal_window"]) if cfg["signal_window"] is not None else p.window,
        cfg["signal_side"] if cfg["signal_side"] is not None else p.side,
        bool(cfg["signal_absolute"]) if cfg["signal_absolute"] is not None else p.use_absolute,
        cfg["signal_column"] if cfg["signal_column"] is not None else p.column,
        cfg["signal_rule"] if cfg["signal_rule"] is not None else p.rule,
    )


def bundled_data_path() -> Path:
    return Path(str(resources.files("tsxai") / "resources" / "synthetic_prices.csv"))


def bundled_config_path() -> Path:
    return Path(str(resources.files("tsxai") / "resources" / "example.toml"))


# -- artifact plumbing -------------------------------------------------------


class Run:
    def __init__(self, cfg: dict, out: Path, jobs: int):
        self.cfg, self.out, self.jobs = cfg, out, jobs
        self.written: list[Path] = []

    def path(self, *parts) -> Path:
        return self.out.joinpath(*parts)

    def need(self, *paths: Path):
        missing = [p for p in paths if not p.exists()]
        if missing:
            raise MissingArtifacts(missing)

    def track(self, p):
        if isinstance(p, (list, tuple)):
            for x in p:
                self.track(x)
        else:
            self.written.append(Path(p))
        return p

    def load_datasets(self):
        d = self.path("dataset")
        self.need(d / "dataset.csv", d / "scaling.json")
        meta = json.loads((d / "scaling.json").read_text(encoding="utf-8"))
        sx = data.ScalingParams.from_dict(meta["scaling_x"])
        sy = data.ScalingParams.from_dict(meta["scaling_y"])
        parts = data.read_dataset_csv(d / "dataset.csv", sx, sy)
        return parts["in"], parts.get("out"), meta

    def load_ensemble(self) -> train.Ensemble:
        self.need(self.path("ensemble", "manifest.json"))
        return train.Ensemble.load(self.path("ensemble"))


def _sha256(p: Path) -> str:
    return hashlib.sha256(p.read_bytes()).hexdigest()


def _update_manifest(run: Run, command: str, seconds: float, seeds=None):
    mp = run.path("run_manifest.json")
    doc = json.loads(mp.read_text(encoding="utf-8")) if mp.exists() else {}
    doc["tool_version"] = __version__
    doc["config_hash"] = config_hash(run.cfg)
    entry = {
        "config_hash": config_hash(run.cfg),
        "wall_clock_seconds": round(seconds, 3),
        "finished_at": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "artifacts": {str(p.relative_to(run.out)): _sha256(p) for p in sorted(set(run.written))},
    }
    if seeds is not None:
        entry["seeds"] = list(seeds)
    doc.setdefault("commands", {})[command] = entry
    io.write_json(mp, doc)


def _pmap(fn, items, jobs: int):
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# -- commands ----------------------------------------------------------------


def cmd_ingest(run: Run):
    cfg = run.cfg
    src = Path(cfg["data"]) if cfg["data"] else bundled_data_path()
    series = data.load_csv(src, cfg["column"], cfg["date_column"])
    if cfg["transform"] == "log_returns":
        series = data.log_returns(series)
    elif cfg["transform"] != "none":
        raise UsageError(f"unknown transform {cfg['transform']!r}")
    full = data.build_lagged(series, int(cfg["lags"]))
    if cfg["split_date"]:
        boundary = dt.date.fromisoformat(str(cfg["split_date"]))
    else:
        boundary = full.timestamps[(2 * len(full)) // 3 - 1]
    ins, outs = data.split(full, boundary)
    d = run.path("dataset")
    d.mkdir(parents=True, exist_ok=True)
    data.write_dataset_csv(d / "dataset.csv", [("in", ins), ("out", outs)])
    run.track(d / "dataset.csv")
    run.track(io.write_json(d / "scaling.json", {
        "scaling_x": ins.scaling_x.to_dict(),
        "scaling_y": ins.scaling_y.to_dict(),
        "lags": int(cfg["lags"]),
        "split_date": boundary.isoformat(),
        "rows_in": len(ins),
        "rows_out": len(outs),
        "source_sha256": _sha256(src),
    }))
    logger.info("dataset: %d in-sample rows, %d out-of-sample rows, n=%d", len(ins), len(outs), ins.n)


def _architecture(cfg, n: int) -> NetArchitecture:
    return NetArchitecture((n, *[int(h) for h in cfg["hidden"]], 1), cfg["output_activation"])


def cmd_train(run: Run):
    cfg = run.cfg
    ins, _, _ = run.load_datasets()
    tc = train.TrainConfig(float(cfg["learning_rate"]), int(cfg["max_epochs"]), float(cfg["tolerance"]), int(cfg["seed"]))
    arch = _architecture(cfg, ins.n)
    ens = train.train_ensemble(arch, ins, tc, int(cfg["members"]), run.jobs)
    target = run.path("ensemble")
    if target.exists():
        for old in target.glob("member_*.json"):
            old.unlink()
    run.track(ens.save(target))
    for s, rep in zip(ens.seeds, ens.reports):
        logger.info("member seed %d: mse scaled %.6g, back-transformed %.6g", s, rep.final_mse_scaled, rep.final_mse_original)
    return ens.seeds


def _explain_member(args):
    net, kind, X, y_in, n_in, layer, xf_name = args
    if kind == "lpd":
        return xai.lpd_series(net, X).matrices[0]
    if kind == "qpd":
        return xai.qpd_series(net, X, full=False).tensors[0]
    if kind == "qpd_full":
        return xai.qpd_series(net, X, full=True).tensors[0].reshape(len(X), -1)
    if kind == "ipd":
        return xai.ipd_series(net, X[:n_in], y_in).values
    if kind == "layer":
        return np.stack([xai.layer_intercept(net, x, layer).T.ravel() for x in X])
    if kind == "xf":
        xf = {"squared": xai.squared_output_xf(0), "identity": xai.identity_xf(0)}[xf_name]
        return np.stack([xai.xf_first_order(net, x, xf) for x in X])
    raise UsageError(f"unknown explain kind {kind!r}")


def _explain_columns(kind: str, n: int, net) -> list[str]:
    lags = [f"lag_{i}" for i in range(1, n + 1)]
    if kind == "lpd":
        return xai.lpd_columns(n)
    if kind == "qpd_full":
        return [f"{a}:{b}" for a in lags for b in lags]
    if kind == "layer":
        return [f"h{h}:{lag}" for h in range(1, net + 1) for lag in lags]
    return lags


def cmd_explain(run: Run, kinds=None):
    cfg = run.cfg
    kinds = list(kinds or cfg["explain"])
    for k in kinds:
        if k not in EXPLAIN_KINDS:
            raise UsageError(f"unknown explain kind {k!r} (choose from {', '.join(EXPLAIN_KINDS)})")
    ins, outs, _ = run.load_datasets()
    ens = run.load_ensemble()
    parts = [("in", ins)] + ([("out", outs)] if outs is not None else [])
    X = np.vstack([p.X for _, p in parts])
    dates = [t for _, p in parts for t in p.timestamps]
    labels = [lab for lab, p in parts for _ in range(len(p))]
    layer = int(cfg["explain_layer"])
    depth = ens.nets[0].architecture.depth
    if "layer" in kinds and not 1 <= layer <= depth:
        raise UsageError(f"explain_layer must be in 1..{depth}")
    for kind in kinds:
        inner = "qpd_full" if kind == "qpd" and cfg["qpd_full"] else kind
        tasks = [(net, inner, X, ins.y, len(ins), layer, cfg["explain_xf"]) for net in ens.nets]
        mats = _pmap(_explain_member, tasks, run.jobs)
        width = ens.nets[0].architecture.layer_dims[layer] if kind == "layer" else None
        cols = _explain_columns(inner, ins.n, width)
        rows = len(mats[0])
        d = run.path("explain", kind)
        d.mkdir(parents=True, exist_ok=True)
        for old in d.glob("member_*.csv"):
            old.unlink()
        extra = {"sample": labels[:rows]}
        for i, m in enumerate(mats):
            run.track(io.write_matrix(d / f"member_{i:03d}.csv", dates[:rows], cols, m, extra))
        if len(mats) >= 2:
            st = analytics.ensemble_lpd_stats(mats)
            for name in ("mean", "sigma", "tstat"):
                run.track(io.write_matrix(d / f"{name}.csv", dates[:rows], cols, getattr(st, name), extra))
        else:
            run.track(io.write_matrix(d / "mean.csv", dates[:rows], cols, mats[0], extra))
        logger.info("explain %s: %d members, %d rows", kind, len(mats), rows)


def _read_explain(run: Run, kind: str, name: str = "mean"):
    p = run.path("explain", kind, f"{name}.csv")
    run.need(p)
    cols, dates, text, M = io.read_matrix(p)
    return cols, dates, text.get("sample"), M


def cmd_signals(run: Run):
    cfg = run.cfg
    preset = signal_preset(cfg)
    ins, outs, _ = run.load_datasets()
    cols, dates, _, M = _read_explain(run, "lpd")
    y = np.concatenate([ins.y_raw] + ([outs.y_raw] if outs is not None else []))
    n = len(cols) - 1
    if preset.rule == "aggregate":
        sig = analytics.aggregate_exposure(M, preset.window, preset.q, dates)
        drift = None
    elif preset.rule == "exit":
        idx = analytics.column_index(preset.column, n)
        sig = analytics.exit_signals(M[:, idx], preset.window, preset.q, preset.side, preset.use_absolute, dates)
        # the row-t sensitivity is known before y_t is realized
        drift = analytics.drift_analysis(sig, y)
    else:
        raise UsageError(f"unknown signal rule {preset.rule!r}")
    d = run.path("signals")
    d.mkdir(parents=True, exist_ok=True)
    run.track(sig.write_csv(d / "signals.csv"))
    summary = {
        "preset": preset.name, "q": preset.q, "window": preset.window, "side": preset.side,
        "use_absolute": preset.use_absolute, "column": preset.column, "rule": preset.rule,
        "defined_points": int(sig.defined.sum()), "exits": int(np.sum(sig.defined & (sig.exposure == 0))),
        "mean_exposure": float(np.mean(sig.exposure[sig.defined])) if sig.defined.any() else math.nan,
    }
    if drift is not None:
        run.track(drift.write_csv(d / "drift.csv"))
        summary["drift"] = {r.regime: {"count": r.count, "proportion_positive_pct": r.proportion_positive,
                                       "average_next_return_pct": r.average_next_return} for r in drift.rows}
    elif (d / "drift.csv").exists():
        (d / "drift.csv").unlink()
    run.track(io.write_json(d / "summary.json", summary))


def _member_forecasts(net, outs, nxt_scaled) -> np.ndarray:
    o = outs.scaling_y.invert(predict_series(net, outs.X)[:, 0])
    o_next = float(outs.scaling_y.invert(predict_series(net, nxt_scaled[None, :])[0, 0]))
    return backtest.decision_forecasts(o, o_next)


def cmd_backtest(run: Run):
    cfg = run.cfg
    ins, outs, _ = run.load_datasets()
    if outs is None or len(outs) < 2:
        raise data.DataError("backtest needs at least two out-of-sample rows")
    ens = run.load_ensemble()
    strategy = cfg["strategy"]
    if strategy != "sign_rule":
        run.need(run.path("signals", "signals.csv"))
    ppy, rf, cost = float(cfg["periods_per_year"]), float(cfg["risk_free"]), float(cfg["cost"])
    r, ts = outs.y_raw, outs.timestamps
    nxt = outs.scaling_x.apply(np.concatenate([[outs.y_raw[-1]], outs.X_raw[-1, :-1]]))
    forecasts = [_member_forecasts(net, outs, nxt) for net in ens.nets]
    d = run.path("backtest")
    (d / "members").mkdir(parents=True, exist_ok=True)
    report = {"periods_per_year": ppy, "risk_free": rf, "cost": cost, "strategy": strategy, "members": []}
    for i, f in enumerate(forecasts):
        res = backtest.sign_rule(f, r, ts, cost=cost)
        run.track(res.write_csv(d / "members" / f"member_{i:03d}.csv"))
        report["members"].append({"seed": ens.seeds[i], **backtest.metrics(res, rf, ppy).to_dict()})
    mean_f = np.mean(np.stack(forecasts), axis=0)
    mean_res = backtest.sign_rule(mean_f, r, ts, cost=cost)
    bench = backtest.buy_and_hold(r, ts)
    run.track(mean_res.write_csv(d / "mean.csv"))
    run.track(bench.write_csv(d / "benchmark.csv"))
    report["mean"] = backtest.metrics(mean_res, rf, ppy).to_dict()
    report["benchmark"] = backtest.metrics(bench, rf, ppy).to_dict()
    if strategy == "sign_rule":
        strat = mean_res
    else:
        sig_path = run.path("signals", "signals.csv")
        _, sdates, _, S = io.read_matrix(sig_path)
        pos_by_date = dict(zip(sdates, S[:, 0]))
        missing = [t for t in ts if t not in pos_by_date]
        if missing:
            raise data.DataError(f"signals do not cover out-of-sample date {missing[0].isoformat()}")
        row_exposure = np.array([pos_by_date[t] for t in ts])
        # exposure of row t is decided at t-1; the final decision carries the last value
        dec = np.concatenate([row_exposure[1:], row_exposure[-1:]])
        fn = backtest.exposure_strategy if strategy == "exposure" else backtest.long_short_strategy
        strat = fn(dec, r, ts, cost=cost)
    run.track(strat.write_csv(d / "strategy.csv"))
    report["strategy_metrics"] = backtest.metrics(strat, rf, ppy).to_dict()
    run.track(io.write_json(d / "metrics.json", report))


def cmd_report(run: Run):
    from . import plotting

    d = run.path("report")
    d.mkdir(parents=True, exist_ok=True)
    summary: dict = {}
    lpd_dir = run.path("explain", "lpd")
    run.need(lpd_dir / "mean.csv")
    members = sorted(lpd_dir.glob("member_*.csv"))
    cols, dates, _, mean = _read_explain(run, "lpd")
    mats = [io.read_matrix(p)[3] for p in members]
    if len(mats) >= 2:
        st = analytics.ensemble_lpd_stats(mats)
        b, w = analytics.heuristic_summary(st)
        summary["heuristic"] = {"intercept": b, "weights": list(w)}
        if len(dates) >= 3:
            cc = analytics.lpd_cross_correlations(mats, 0)
            rows, header = cc.rows()
            run.track(io.write_rows(d / "cross_correlations.csv", ["row", *header], rows))
            summary["cross_correlations"] = {"mean_vs_reference": list(cc.mean_vs_reference),
                                             "member_vs_mean": list(cc.member_vs_mean)}
        run.track(plotting.lpd_bands(d / "lpd_mean.png", dates, cols, st.mean, st.sigma))
        run.track(plotting.tstats(d / "lpd_tstat.png", dates, cols, st.tstat))
    else:
        run.track(plotting.lpd_bands(d / "lpd_mean.png", dates, cols, mean, None))
    ins, outs, _ = run.load_datasets()
    ens = run.load_ensemble()
    if len(ens) >= 3 and outs is not None:
        try:
            c = train.in_out_correlations(ens, ins, outs)
            summary["in_out_correlations"] = {"mse_in_mse_out": c.mse_in_mse_out,
                                              "mse_in_sharpe_out": c.mse_in_sharpe_out,
                                              "sharpe_in_sharpe_out": c.sharpe_in_sharpe_out}
        except ValueError as exc:
            summary["in_out_correlations"] = {"error": str(exc)}
    qpd_mean = run.path("explain", "qpd", "mean.csv")
    if qpd_mean.exists():
        qc, qd, _, Q = io.read_matrix(qpd_mean)
        run.track(plotting.lines(d / "qpd_mean.png", qd, qc, Q, "mean QPD"))
    ipd_mean = run.path("explain", "ipd", "mean.csv")
    if ipd_mean.exists():
        ic, idates, _, I = io.read_matrix(ipd_mean)
        run.track(plotting.lines(d / "ipd_mean.png", idates, ic, I, "mean IPD (in-sample)"))
    sig = run.path("signals", "signals.csv")
    if sig.exists():
        scols, sdates, _, S = io.read_matrix(sig)
        run.track(plotting.signals(d / "signals.png", sdates, S[:, scols.index("value")],
                                   S[:, scols.index("lower")], S[:, scols.index("upper")],
                                   S[:, scols.index("exposure")]))
    bt = run.path("backtest")
    if (bt / "metrics.json").exists():
        curves = {}
        for p in sorted((bt / "members").glob("member_*.csv")):
            curves[p.stem] = io.read_matrix(p)
        named = {k: io.read_matrix(bt / f"{k}.csv") for k in ("mean", "benchmark", "strategy") if (bt / f"{k}.csv").exists()}
        run.track(plotting.performance(d / "performance.png", curves, named))
        summary["backtest"] = json.loads((bt / "metrics.json").read_text(encoding="utf-8"))
    run.track(io.write_json(d / "summary.json", summary))


# -- entry point -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat TOML config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--out", help=f"output directory (default: ${ENV_OUTPUT} or ./tsxai-out)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="tsxai", description="Time-series sensitivities of feedforward nets.")
    p.add_argument("--version", action="version", version=f"tsxai {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("ingest", parents=[common], help="build the lagged dataset")
    sub.add_parser("train", parents=[common], help="train the random-net ensemble")
    ex = sub.add_parser("explain", parents=[common], help="per-member and ensemble sensitivities")
    ex.add_argument("--kind", action="append", help=f"one of {', '.join(EXPLAIN_KINDS)} (repeatable)")
    sg = sub.add_parser("signals", parents=[common], help="rolling-quantile exit signals and drift table")
    sg.add_argument("--preset", choices=sorted(analytics.PRESETS))
    bt = sub.add_parser("backtest", parents=[common], help="sign-rule and signal strategies")
    bt.add_argument("--strategy", choices=STRATEGIES)
    sub.add_parser("report", parents=[common], help="figures and summary tables")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"tsxai: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        overrides = list(args.set)
        if getattr(args, "preset", None):
            overrides.append(f'preset="{args.preset}"')
        if getattr(args, "strategy", None):
            overrides.append(f'strategy="{args.strategy}"')
        cfg = load_config(args.config, overrides)
        out = Path(args.out or cfg["output_dir"] or os.environ.get(ENV_OUTPUT) or "tsxai-out")
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        run = Run(cfg, out, args.jobs)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        seeds = None
        if args.command == "ingest":
            cmd_ingest(run)
        elif args.command == "train":
            seeds = cmd_train(run)
        elif args.command == "explain":
            cmd_explain(run, args.kind)
        elif args.command == "signals":
            cmd_signals(run)
        elif args.command == "backtest":
            cmd_backtest(run)
        elif args.command == "report":
            cmd_report(run)
        _update_manifest(run, args.command, time.perf_counter() - t0, seeds)
    except UsageError as exc:
        print(f"tsxai: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (train.TrainingError, ArithmeticError) as exc:
        print(f"tsxai: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"tsxai: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
