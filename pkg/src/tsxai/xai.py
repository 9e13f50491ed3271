"""Input-space sensitivities of feedforward nets, one row per time point.

LPD rows are ``(b_t, w_1t, ..., w_nt)``: the exact local linear replication
``o_t = b_t + sum_i w_it x_it`` of the net output at the input ``x_t``.  QPD
holds the matching second derivatives, IPD the derivative of the sample MSE
with respect to every design-matrix entry.

Two chain-rule sequences are available for the Jacobian:

* forward: ``dAf[1] = W1 * s1`` then ``dAf[k] = (dAf[k-1] @ Wk) * sk``, giving
  every layer's ``(n, n_k)`` sensitivity to the inputs;
* backward: start from ``s_p`` at the output, ``dAb[k] = (W_{k+1} * s_k) dAb[k+1]``
  and finish with ``dAb[0] = W1 dAb[1]`` (inputs carry no activation).

``s_k`` and ``ss_k`` are the first and second activation derivatives written
through the stored layer outputs, e.g. ``a(1-a)`` and ``a(1-a)(1-2a)``.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .net import FeedforwardNet, ShapeError, act_d1, act_d2, forward, predict_series

SYMMETRY_TOL = 1e-8


class RecursionError_(ArithmeticError):
    """Second-order recursion produced a non-symmetric Hessian."""


class DiscreteProxyWarning(UserWarning):
    pass


# -- X-functions -------------------------------------------------------------


@dataclass(frozen=True)
class XFunction:
    """A scalar function of the output vector with its derivatives."""

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None


def identity_xf(j: int = 0, n_outputs: int = 1) -> XFunction:
    e = np.zeros(n_outputs)
    e[j] = 1.0
    zero = np.zeros((n_outputs, n_outputs))
    return XFunction(f"identity[{j}]", lambda o: float(o[j]), lambda o: e.copy(), lambda o: zero.copy())


def squared_output_xf(j: int = 0, n_outputs: int = 1) -> XFunction:
    def grad(o):
        g = np.zeros(n_outputs)
        g[j] = 2.0 * o[j]
        return g

    def hess(o):
        h = np.zeros((n_outputs, n_outputs))
        h[j, j] = 2.0
        return h

    return XFunction(f"squared[{j}]", lambda o: float(o[j] ** 2), grad, hess)


@dataclass(frozen=True)
class SeriesXFunction:
    """X-function of the whole output path ``o_1..o_T`` of one output neuron."""

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]


def mse_xf(y: Sequence[float]) -> SeriesXFunction:
    y = np.asarray(y, dtype=float)
    T = len(y)
    return SeriesXFunction(
        "mse",
        lambda o: float(np.mean((y - o) ** 2)),
        lambda o: (2.0 / T) * (np.asarray(o) - y),
    )


def windowed_sharpe_xf(
    returns: Sequence[float], start: int = 0, stop: int | None = None, center: float = 0.0
) -> SeriesXFunction:
    """Sharpe ratio of the position-weighted returns ``(o_t - center) * r_t``
    over ``start <= t < stop`` (population standard deviation)."""
    r = np.asarray(returns, dtype=float)
    stop = len(r) if stop is None else stop
    if stop - start < 2:
        raise ValueError("Sharpe window needs at least two points")
    sl = slice(start, stop)

    def value(o):
        s = (np.asarray(o)[sl] - center) * r[sl]
        return float(s.mean() / s.std())

    def gradient(o):
        o = np.asarray(o, dtype=float)
        s = (o[sl] - center) * r[sl]
        W = len(s)
        m, sd = s.mean(), s.std()
        ds = 1.0 / (W * sd) - m * (s - m) / (W * sd**3)
        g = np.zeros_like(o)
        g[sl] = ds * r[sl]
        return g

    return SeriesXFunction(f"sharpe[{start}:{stop}]", value, gradient)


# -- pointwise chains --------------------------------------------------------


@dataclass(frozen=True)
class LayerJacobians:
    """``dA_f[k]`` is (n, n_k) for k = 0..p (``dA_f[0]`` the identity);
    ``dA_b[k]`` is (n_k, n_p) for k = 0..p (``dA_b[0]`` the input Jacobian)."""

    dA_f: tuple[np.ndarray, ...]
    dA_b: tuple[np.ndarray, ...]


def _check_input(net: FeedforwardNet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.architecture.n_inputs,):
        raise ShapeError(f"input has shape {x.shape}, expected ({net.architecture.n_inputs},)")
    return x


def _derivs(net: FeedforwardNet, A):
    kinds = net.architecture.activations
    s = [None] + [act_d1(A[k], kinds[k - 1]) for k in range(1, len(A))]
    ss = [None] + [act_d2(A[k], kinds[k - 1]) for k in range(1, len(A))]
    return s, ss


def _forward_chain(net: FeedforwardNet, s) -> list[np.ndarray]:
    W = net.weights
    dAf = [np.eye(net.architecture.n_inputs), W[0] * s[1][None, :]]
    for k in range(2, len(W) + 1):
        dAf.append((dAf[k - 1] @ W[k - 1]) * s[k][None, :])
    return dAf


def _backward_vector(net: FeedforwardNet, s, seed: np.ndarray) -> list[np.ndarray]:
    """Backward sequence for one output-layer seed vector (length n_p).

    Element k of the result is the gradient w.r.t. the pre-activation of
    layer k (k >= 1) and, at k = 0, w.r.t. the inputs.
    """
    W = net.weights
    p = len(W)
    dAb = [None] * (p + 1)
    dAb[p] = seed
    for k in range(p - 1, 0, -1):
        dAb[k] = (W[k] * s[k][:, None]) @ dAb[k + 1]
    dAb[0] = W[0] @ dAb[1]
    return dAb


def _output_seed(net, s, j: int) -> np.ndarray:
    seed = np.zeros(net.architecture.n_outputs)
    seed[j] = s[-1][j]
    return seed


def lpd_forward(net: FeedforwardNet, x) -> tuple[np.ndarray, LayerJacobians]:
    """Input Jacobian (n, n_p) by the forward sequence, with all layer terms."""
    x = _check_input(net, x)
    A = forward(net, x).A
    s, _ = _derivs(net, A)
    dAf = _forward_chain(net, s)
    dAb = [np.stack(c, axis=1) for c in zip(*(_backward_vector(net, s, _output_seed(net, s, j))
                                               for j in range(net.architecture.n_outputs)))]
    return dAf[-1], LayerJacobians(tuple(dAf), tuple(dAb))


def lpd_backward(net: FeedforwardNet, x) -> np.ndarray:
    """Input Jacobian (n, n_p) by the backward sequence, one output at a time."""
    x = _check_input(net, x)
    A = forward(net, x).A
    s, _ = _derivs(net, A)
    cols = [_backward_vector(net, s, _output_seed(net, s, j))[0] for j in range(net.architecture.n_outputs)]
    return np.stack(cols, axis=1)


def layer_jacobians(net: FeedforwardNet, x) -> LayerJacobians:
    return lpd_forward(net, x)[1]


def layer_intercept(net: FeedforwardNet, x, k: int) -> np.ndarray:
    """Sensitivities (n, n_k) of the layer-``k`` neurons to the inputs.

    ``k = p`` gives the output Jacobian, i.e. the LPD without intercept.
    """
    p = net.architecture.depth
    if not 1 <= k <= p:
        raise ValueError(f"layer index must be in 1..{p}, got {k}")
    x = _check_input(net, x)
    s, _ = _derivs(net, forward(net, x).A)
    return _forward_chain(net, s)[k]


def synthetic_intercept(o: float, lpd_row, x) -> float:
    return float(o - np.dot(np.asarray(lpd_row, dtype=float), np.asarray(x, dtype=float)))


def xf_first_order(net: FeedforwardNet, x, xf: XFunction, direction: str = "backward") -> np.ndarray:
    """Gradient of ``xf(o(x))`` w.r.t. the inputs (length n).

    The backward route seeds the output layer with ``grad xf * s_p``; the
    forward route contracts the forward Jacobian with ``grad xf``.
    """
    if xf.gradient is None:
        raise ValueError(f"X-function {xf.name!r} has no gradient; use discrete_proxy")
    x = _check_input(net, x)
    A = forward(net, x).A
    s, _ = _derivs(net, A)
    g = np.asarray(xf.gradient(A[-1]), dtype=float)
    if direction == "backward":
        return _backward_vector(net, s, g * s[-1])[0]
    if direction == "forward":
        return _forward_chain(net, s)[-1] @ g
    raise ValueError(f"unknown direction {direction!r}")


def second_order_raw(net: FeedforwardNet, x, g: np.ndarray, H: np.ndarray | None = None) -> np.ndarray:
    """Hessian (n, n) of ``xf(o(x))`` given ``grad xf`` and ``hess xf`` at o(x),
    before symmetrization.

    ``G[k]`` is the (n, n_k) derivative w.r.t. x of the backward term at layer
    k.  Seeded at the output, then for each hidden layer it is the sum of the
    propagated term ``(G[k+1] @ W_{k+1}') * s_k`` and the local curvature term
    ``(dAf[k-1] @ W_k) * (ss_k * W_{k+1} gz_{k+1})``.  The last and first hidden
    layers are the cases with a single output column and ``dAf[0] = I``.
    """
    A = forward(net, x).A
    s, ss = _derivs(net, A)
    dAf = _forward_chain(net, s)
    W = net.weights
    p = len(W)
    gz = g * s[p]
    G = (dAf[p - 1] @ W[p - 1]) * (g * ss[p])[None, :]
    if H is not None and np.any(H):
        G = G + (dAf[p] @ H) * s[p][None, :]
    for k in range(p - 1, 0, -1):
        u = W[k] @ gz
        G = (G @ W[k].T) * s[k][None, :] + (dAf[k - 1] @ W[k - 1]) * (ss[k] * u)[None, :]
        gz = s[k] * u
    return W[0] @ G.T


def _second_order(net: FeedforwardNet, x, g: np.ndarray, H: np.ndarray | None) -> np.ndarray:
    Q = second_order_raw(net, x, g, H)
    asym = float(np.max(np.abs(Q - Q.T))) if Q.size else 0.0
    if asym >= SYMMETRY_TOL:
        raise RecursionError_(f"recursion inconsistency: QPD asymmetry {asym:.3g}")
    return 0.5 * (Q + Q.T)


def qpd(net: FeedforwardNet, x, j: int = 0) -> np.ndarray:
    """Second derivatives ``d2 o_j / dx_i dx_k`` at ``x`` (symmetric n x n)."""
    x = _check_input(net, x)
    g = np.zeros(net.architecture.n_outputs)
    g[j] = 1.0
    return _second_order(net, x, g, None)


def xf_second_order(net: FeedforwardNet, x, xf: XFunction) -> np.ndarray:
    """Hessian of ``xf(o(x))`` w.r.t. the inputs.

    The output seed is ``grad xf * ddA_p + hess xf * s_p * d o/dx``; the
    remaining layers run the ordinary QPD recursion.
    """
    if xf.gradient is None or xf.hessian is None:
        raise ValueError(f"X-function {xf.name!r} lacks a gradient or hessian")
    x = _check_input(net, x)
    o = forward(net, x).output
    return _second_order(net, x, np.asarray(xf.gradient(o), dtype=float), np.asarray(xf.hessian(o), dtype=float))


def intercept_gradient(qpd_jt: np.ndarray, x) -> np.ndarray:
    """Gradient of the synthetic intercept w.r.t. the inputs: ``-QPD x``."""
    return -np.asarray(qpd_jt) @ np.asarray(x, dtype=float)


# -- series ------------------------------------------------------------------


def _default_dates(T: int) -> tuple[dt.date, ...]:
    return tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(T))


def _check_design(net: FeedforwardNet, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.architecture.n_inputs:
        raise ShapeError(f"design matrix has shape {X.shape}, expected (T, {net.architecture.n_inputs})")
    return X


@dataclass(frozen=True)
class LpdSeries:
    """Per output neuron a T x (n+1) matrix: intercept, then one column per input."""

    timestamps: tuple[dt.date, ...]
    matrices: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return self.matrices[0].shape[1] - 1

    def __len__(self) -> int:
        return len(self.timestamps)

    def intercepts(self, j: int = 0) -> np.ndarray:
        return self.matrices[j][:, 0]

    def weights(self, j: int = 0) -> np.ndarray:
        return self.matrices[j][:, 1:]

    def replicate(self, X, j: int = 0) -> np.ndarray:
        """Outputs reconstructed from the linear replication."""
        return self.intercepts(j) + np.sum(self.weights(j) * np.asarray(X), axis=1)


def lpd_series(net: FeedforwardNet, X, timestamps: Sequence[dt.date] | None = None) -> LpdSeries:
    X = _check_design(net, X)
    T, n = X.shape
    n_p = net.architecture.n_outputs
    mats = [np.empty((T, n + 1)) for _ in range(n_p)]
    for t in range(T):
        try:
            A = forward(net, X[t]).A
            s, _ = _derivs(net, A)
            for j in range(n_p):
                w = _backward_vector(net, s, _output_seed(net, s, j))[0]
                mats[j][t, 0] = synthetic_intercept(A[-1][j], w, X[t])
                mats[j][t, 1:] = w
        except (ValueError, ArithmeticError) as exc:
            raise type(exc)(f"row {t}: {exc}") from exc
    ts = tuple(timestamps) if timestamps is not None else _default_dates(T)
    return LpdSeries(ts, tuple(mats))


@dataclass(frozen=True)
class QpdSeries:
    """Per output neuron either T x n x n (full) or T x n (diagonal only)."""

    timestamps: tuple[dt.date, ...]
    tensors: tuple[np.ndarray, ...]
    full: bool

    def diagonal(self, j: int = 0) -> np.ndarray:
        t = self.tensors[j]
        return np.diagonal(t, axis1=1, axis2=2).copy() if self.full else t


def qpd_series(
    net: FeedforwardNet, X, timestamps: Sequence[dt.date] | None = None, full: bool = False
) -> QpdSeries:
    X = _check_design(net, X)
    T, n = X.shape
    out = []
    for j in range(net.architecture.n_outputs):
        arr = np.empty((T, n, n)) if full else np.empty((T, n))
        for t in range(T):
            try:
                Q = qpd(net, X[t], j)
            except (ValueError, ArithmeticError) as exc:
                raise type(exc)(f"row {t}: {exc}") from exc
            arr[t] = Q if full else np.diag(Q)
        out.append(arr)
    ts = tuple(timestamps) if timestamps is not None else _default_dates(T)
    return QpdSeries(ts, tuple(out), full)


@dataclass(frozen=True)
class IpdSeries:
    timestamps: tuple[dt.date, ...]
    values: np.ndarray  # T x n


def series_sensitivity(
    net: FeedforwardNet, X, sxf: SeriesXFunction, j: int = 0, lpd: LpdSeries | None = None
) -> np.ndarray:
    """T x n derivatives of a path X-function w.r.t. each design-matrix entry.

    Entry ``x_it`` only feeds the time-t output, so the derivative is
    ``d xf / d o_t * d o_t / d x_it``.
    """
    X = _check_design(net, X)
    lpd = lpd if lpd is not None else lpd_series(net, X)
    o = predict_series(net, X)[:, j]
    return np.asarray(sxf.gradient(o))[:, None] * lpd.weights(j)


def ipd_series(
    net: FeedforwardNet, X, y, timestamps: Sequence[dt.date] | None = None, lpd: LpdSeries | None = None
) -> IpdSeries:
    """``dmse_it = (2/T) (o_t - y_t) w_it`` for a single-output net."""
    X = _check_design(net, X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise ValueError(f"target length {y.shape} does not match {X.shape[0]} rows")
    lpd = lpd if lpd is not None else lpd_series(net, X, timestamps)
    T = X.shape[0]
    o = predict_series(net, X)[:, 0]
    vals = (2.0 / T) * (o - y)[:, None] * lpd.weights(0)
    return IpdSeries(lpd.timestamps, vals)


def discrete_proxy(xf_eval: Callable[[np.ndarray], float], X, i: int, t: int, delta: float) -> float:
    """One-sided difference ``(xf(X + delta e_ti) - xf(X)) / delta``.

    For X-functions without derivatives.  The result depends on ``delta`` and
    is exposed to cancellation for small steps.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    warnings.warn("discrete proxy depends on the choice of delta", DiscreteProxyWarning, stacklevel=2)
    X = np.array(X, dtype=float)
    base = float(xf_eval(X))
    X[t, i] += delta
    return (float(xf_eval(X)) - base) / delta


# -- units -------------------------------------------------------------------


def lpd_to_original_units(lpd: LpdSeries, scaling_x, scaling_y) -> LpdSeries:
    """Express LPD rows for original-scale inputs and outputs.

    Weights scale by ``range_y / range_x``; the intercept absorbs both offsets
    so the linear replication still holds on the original scale.
    """
    ratio = scaling_y.range / scaling_x.range
    mats = []
    for m in lpd.matrices:
        w = m[:, 1:] * ratio
        b = scaling_y.min + scaling_y.range * m[:, 0] - scaling_x.min * np.sum(w, axis=1)
        mats.append(np.column_stack([b, w]))
    return LpdSeries(lpd.timestamps, tuple(mats))


def lpd_columns(n: int) -> list[str]:
    return ["intercept"] + [f"lag_{i}" for i in range(1, n + 1)]

