"""MSE fitting by full-batch steepest descent, and random-net ensembles."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import LaggedDataset
from .net import SIGMOID, FeedforwardNet, NetArchitecture, act_d1, forward_batch, init_random, predict_series, sigmoid

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class DivergenceError(TrainingError):
    def __init__(self, msg: str, last_finite_epoch: int):
        super().__init__(msg)
        self.last_finite_epoch = last_finite_epoch


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    max_epochs: int = 5000
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0 or not math.isfinite(self.learning_rate):
            raise ValueError("learning_rate must be a finite non-negative number")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass(frozen=True)
class FitReport:
    final_mse_scaled: float
    final_mse_original: float
    epochs_run: int
    converged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _loss_grad(ws, bs, kinds, X, Y):
    A = [X]
    for w, b, kind in zip(ws, bs, kinds):
        z = A[-1] @ w + b
        A.append(sigmoid(z) if kind == SIGMOID else z)
    resid = A[-1] - Y
    mse = float(np.mean(resid**2))
    delta = (2.0 / resid.size) * resid * act_d1(A[-1], kinds[-1])
    p = len(ws)
    gw = [None] * p
    gb = [None] * p
    for k in range(p - 1, -1, -1):
        gw[k] = A[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ ws[k].T) * act_d1(A[k], kinds[k - 1])
    return mse, gw, gb


def mse_and_gradient(net: FeedforwardNet, X: np.ndarray, Y: np.ndarray):
    """Full-batch MSE and its gradient w.r.t. every weight and bias.

    ``Y`` is T x n_p; the loss is the mean over all T * n_p squared residuals.
    Returns ``(mse, grad_w, grad_b)`` with lists shaped like the parameters.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(X), -1)
    return _loss_grad(net.weights, net.biases, net.architecture.activations, X, Y)


def _targets(d: LaggedDataset, n_out: int) -> np.ndarray:
    y = np.asarray(d.y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[1] != n_out:
        raise ValueError(f"target has {y.shape[1]} columns, net has {n_out} outputs")
    return y


def original_scale_mse(net: FeedforwardNet, d: LaggedDataset) -> float:
    o = d.scaling_y.invert(predict_series(net, d.X)[:, 0])
    return float(np.mean((o - d.y_raw) ** 2))


def train(net: FeedforwardNet, d: LaggedDataset, cfg: TrainConfig) -> tuple[FeedforwardNet, FitReport]:
    if len(d) == 0:
        raise ValueError("empty dataset")
    if d.n != net.architecture.n_inputs:
        raise ValueError(f"dataset has {d.n} inputs, net expects {net.architecture.n_inputs}")
    X = np.asarray(d.X)
    Y = _targets(d, net.architecture.n_outputs)
    kinds = net.architecture.activations
    ws = [w.copy() for w in net.weights]
    bs = [b.copy() for b in net.biases]
    converged = False
    epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            mse, gw, gb = _loss_grad(ws, bs, kinds, X, Y)
        if not math.isfinite(mse):
            raise DivergenceError(f"non-finite loss at epoch {epoch} (seed {net.seed})", epochs)
        gnorm = math.sqrt(sum(float(np.sum(g * g)) for g in gw + gb))
        if gnorm <= cfg.tolerance:
            converged = True
            break
        for k in range(len(ws)):
            ws[k] -= cfg.learning_rate * gw[k]
            bs[k] -= cfg.learning_rate * gb[k]
        epochs = epoch
    try:
        cur = FeedforwardNet(net.architecture, tuple(ws), tuple(bs), net.seed)
    except ValueError:
        raise DivergenceError(f"non-finite parameters after epoch {epochs} (seed {net.seed})", epochs) from None
    final_mse = float(np.mean((forward_batch(cur, X)[-1] - Y) ** 2))
    if not math.isfinite(final_mse):
        raise DivergenceError(f"non-finite final loss (seed {net.seed})", epochs)
    report = FitReport(final_mse, original_scale_mse(cur, d), epochs, converged)
    return cur, report


@dataclass(frozen=True)
class Ensemble:
    members: tuple[tuple[FeedforwardNet, FitReport], ...]
    seeds: tuple[int, ...]
    config: TrainConfig
    data_fingerprint: str

    @property
    def nets(self) -> list[FeedforwardNet]:
        return [m[0] for m in self.members]

    @property
    def reports(self) -> list[FitReport]:
        return [m[1] for m in self.members]

    def __len__(self) -> int:
        return len(self.members)

    def save(self, directory) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for i, (net, rep) in enumerate(self.members):
            p = directory / f"member_{i:03d}.json"
            net.save(p)
            written.append(p)
        manifest = {
            "architecture": {
                "layer_dims": list(self.members[0][0].architecture.layer_dims),
                "output_activation": self.members[0][0].architecture.output_activation,
            },
            "config": asdict(self.config),
            "data_fingerprint": self.data_fingerprint,
            "members": [
                {"file": f"member_{i:03d}.json", "seed": s, "fit": rep.to_dict()}
                for i, (s, (_, rep)) in enumerate(zip(self.seeds, self.members))
            ],
        }
        mp = directory / "manifest.json"
        mp.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        written.append(mp)
        return written

    @classmethod
    def load(cls, directory) -> "Ensemble":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        members = []
        for m in manifest["members"]:
            net = FeedforwardNet.load(directory / m["file"])
            members.append((net, FitReport(**m["fit"])))
        return cls(
            tuple(members),
            tuple(m["seed"] for m in manifest["members"]),
            TrainConfig(**manifest["config"]),
            manifest["data_fingerprint"],
        )


def _train_member(args):
    arch, d, cfg, seed = args
    net = init_random(arch, seed)
    try:
        return train(net, d, TrainConfig(cfg.learning_rate, cfg.max_epochs, cfg.tolerance, seed))
    except TrainingError as exc:
        raise TrainingError(f"ensemble member with seed {seed} failed: {exc}") from exc


def train_ensemble(
    arch: NetArchitecture, d: LaggedDataset, cfg: TrainConfig, M: int, jobs: int = 1
) -> Ensemble:
    """Train ``M`` nets from seeds ``cfg.seed + i``; results come back in seed order."""
    if M < 1:
        raise ValueError("ensemble size must be >= 1")
    seeds = [cfg.seed + i for i in range(M)]
    tasks = [(arch, d, cfg, s) for s in seeds]
    if jobs > 1 and M > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, M)) as pool:
            results = list(pool.map(_train_member, tasks))
    else:
        results = [_train_member(t) for t in tasks]
    for s, (_, rep) in zip(seeds, results):
        logger.info("seed %d: mse scaled %.6g, original %.6g, epochs %d", s, rep.final_mse_scaled,
                    rep.final_mse_original, rep.epochs_run)
    return Ensemble(tuple(results), tuple(seeds), cfg, d.fingerprint())


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da, db = a - a.mean(), b - b.mean()
    va, vb = float(np.sum(da * da)), float(np.sum(db * db))
    if va == 0.0 or vb == 0.0:
        raise ValueError("zero variance: correlation undefined")
    return float(np.sum(da * db) / math.sqrt(va * vb))


@dataclass(frozen=True)
class InOutCorrelations:
    mse_in_mse_out: float
    mse_in_sharpe_out: float
    sharpe_in_sharpe_out: float


def in_out_correlations(
    e: Ensemble,
    in_sample: LaggedDataset,
    out_sample: LaggedDataset,
    strategy: Callable[[FeedforwardNet, LaggedDataset], float] | None = None,
) -> InOutCorrelations:
    """Cross-member correlations between in- and out-of-sample performances.

    ``strategy(net, dataset)`` returns a Sharpe ratio; the default is the
    sign-rule on back-transformed forecasts.
    """
    if len(e) < 3:
        raise ValueError("insufficient members: need at least 3")
    if strategy is None:
        from .backtest import sign_rule_sharpe as strategy
    mse_in = [original_scale_mse(n, in_sample) for n in e.nets]
    mse_out = [original_scale_mse(n, out_sample) for n in e.nets]
    sh_in = [strategy(n, in_sample) for n in e.nets]
    sh_out = [strategy(n, out_sample) for n in e.nets]
    return InOutCorrelations(pearson(mse_in, mse_out), pearson(mse_in, sh_out), pearson(sh_in, sh_out))
