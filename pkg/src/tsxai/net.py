"""Fully-connected feedforward nets with sigmoid hidden layers.

Weights follow the column convention: ``W[k]`` has shape ``(n_{k-1}, n_k)`` and
layer ``k`` computes ``A_k = act(W[k].T @ A_{k-1} + b[k])``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

SIGMOID = "sigmoid"
IDENTITY = "identity"


class ShapeError(ValueError):
    pass


def sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def act_d1(a: np.ndarray, kind: str) -> np.ndarray:
    """First derivative of the activation, expressed through its output."""
    if kind == SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(a)


def act_d2(a: np.ndarray, kind: str) -> np.ndarray:
    """Second derivative of the activation, expressed through its output."""
    if kind == SIGMOID:
        return a * (1.0 - a) * (1.0 - 2.0 * a)
    return np.zeros_like(a)


@dataclass(frozen=True)
class NetArchitecture:
    layer_dims: tuple[int, ...]
    output_activation: str = SIGMOID

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ShapeError("architecture needs an input and at least one computing layer")
        if any(d < 1 for d in dims):
            raise ShapeError(f"all layer dims must be >= 1, got {dims}")
        if self.output_activation not in (SIGMOID, IDENTITY):
            raise ShapeError(f"unsupported output activation {self.output_activation!r}")

    @property
    def depth(self) -> int:
        """Number of computing layers p (hidden layers + output)."""
        return len(self.layer_dims) - 1

    @property
    def activations(self) -> tuple[str, ...]:
        return (SIGMOID,) * (self.depth - 1) + (self.output_activation,)

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_dims[-1]

    def parameter_counts(self) -> tuple[int, int]:
        """(weights, biases)."""
        d = self.layer_dims
        return sum(d[k] * d[k + 1] for k in range(len(d) - 1)), sum(d[1:])


@dataclass(frozen=True)
class LayerActivations:
    A: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.A[-1]


@dataclass(frozen=True)
class FeedforwardNet:
    architecture: NetArchitecture
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float) for b in self.biases)
        dims = self.architecture.layer_dims
        if len(ws) != len(dims) - 1 or len(bs) != len(dims) - 1:
            raise ShapeError("one weight matrix and one bias vector per computing layer")
        for k, (w, b) in enumerate(zip(ws, bs), start=1):
            if w.shape != (dims[k - 1], dims[k]):
                raise ShapeError(f"W{k} has shape {w.shape}, expected {(dims[k - 1], dims[k])}")
            if b.shape != (dims[k],):
                raise ShapeError(f"b{k} has shape {b.shape}, expected {(dims[k],)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"non-finite parameters in layer {k}")
            w.setflags(write=False)
            b.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    def parameter_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b]
        return np.concatenate(parts)

    def with_parameter_vector(self, theta: np.ndarray) -> "FeedforwardNet":
        ws, bs = [], []
        pos = 0
        for w, b in zip(self.weights, self.biases):
            ws.append(theta[pos : pos + w.size].reshape(w.shape))
            pos += w.size
            bs.append(theta[pos : pos + b.size].copy())
            pos += b.size
        return FeedforwardNet(self.architecture, tuple(ws), tuple(bs), self.seed, dict(self.meta))

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "architecture": {
                "layer_dims": list(self.architecture.layer_dims),
                "output_activation": self.architecture.output_activation,
            },
            "seed": self.seed,
            # hex floats round-trip bit-exactly
            "weights": [[[float(v).hex() for v in row] for row in w] for w in self.weights],
            "biases": [[float(v).hex() for v in b] for b in self.biases],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeedforwardNet":
        arch = NetArchitecture(tuple(d["architecture"]["layer_dims"]), d["architecture"]["output_activation"])
        ws = tuple(
            np.array([[float.fromhex(v) for v in row] for row in w], dtype=float).reshape(
                arch.layer_dims[k], arch.layer_dims[k + 1]
            )
            for k, w in enumerate(d["weights"])
        )
        bs = tuple(np.array([float.fromhex(v) for v in b], dtype=float) for b in d["biases"])
        return cls(arch, ws, bs, d.get("seed"), dict(d.get("meta", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeedforwardNet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


INIT_BOUND = 0.7


def init_random(arch: NetArchitecture, seed: int, bound: float = INIT_BOUND) -> FeedforwardNet:
    """Draw every weight and bias i.i.d. uniform on [-bound, bound]."""
    rng = np.random.default_rng(seed)
    dims = arch.layer_dims
    ws, bs = [], []
    for k in range(1, len(dims)):
        ws.append(rng.uniform(-bound, bound, size=(dims[k - 1], dims[k])))
        bs.append(rng.uniform(-bound, bound, size=dims[k]))
    return FeedforwardNet(arch, tuple(ws), tuple(bs), seed)


def _apply(z: np.ndarray, kind: str) -> np.ndarray:
    return sigmoid(z) if kind == SIGMOID else z


def forward(net: FeedforwardNet, x: Sequence[float]) -> LayerActivations:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.architecture.n_inputs,):
        raise ShapeError(f"input has shape {x.shape}, expected ({net.architecture.n_inputs},)")
    A = [x]
    for w, b, kind in zip(net.weights, net.biases, net.architecture.activations):
        A.append(_apply(w.T @ A[-1] + b, kind))
    return LayerActivations(tuple(A))


def forward_batch(net: FeedforwardNet, X: np.ndarray) -> list[np.ndarray]:
    """Row-wise forward pass; element k of the result is the T x n_k matrix of A_k."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.architecture.n_inputs:
        raise ShapeError(f"design matrix has shape {X.shape}, expected (T, {net.architecture.n_inputs})")
    A = [X]
    for w, b, kind in zip(net.weights, net.biases, net.architecture.activations):
        A.append(_apply(A[-1] @ w + b, kind))
    return A


def predict_series(net: FeedforwardNet, X: np.ndarray) -> np.ndarray:
    """T x n_p matrix of outputs, row by row.

    Rows go through :func:`forward` individually so results are bit-identical
    to pointwise evaluation regardless of T (a batched matmul may reorder sums).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.architecture.n_inputs:
        raise ShapeError(f"design matrix has shape {X.shape}, expected (T, {net.architecture.n_inputs})")
    out = np.empty((X.shape[0], net.architecture.n_outputs))
    for t in range(X.shape[0]):
        out[t] = forward(net, X[t]).output
    return out
