"""Softplus multi-layer perceptron trained by mini-batch Adam, in numpy."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..engine.rng import TRAINING, make_stream, stream_id

MODEL_MAGIC = b"XVASENSI-MODEL01"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 256
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    ridge: float = 1e-6
    lr_final: float | None = None  # geometric decay to this step over training
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class MlpModel:
    """Scalar-output MLP on standardized inputs and labels.

    ``weights[l]`` has shape (fan_in, fan_out); the hidden layers use
    softplus and the output layer is affine.
    """

    weights: list
    biases: list
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float = 0.0
    y_std: float = 1.0
    train_loss: float = float("nan")

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def _forward(self, z):
        pre, act = [], [z]
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            u = act[-1] @ W + b
            if l < len(self.weights) - 1:
                pre.append(u)
                act.append(softplus(u))
            else:
                act.append(u)
        return pre, act

    def _backward(self, pre, act, dout):
        """Gradients of sum(dout * out) w.r.t. parameters and the standardized input."""
        gW, gb = [None] * len(self.weights), [None] * len(self.weights)
        d = dout
        for l in range(len(self.weights) - 1, -1, -1):
            gW[l] = act[l].T @ d
            gb[l] = d.sum(axis=0)
            d = d @ self.weights[l].T
            if l > 0:
                d = d * sigmoid(pre[l - 1])
        return gW, gb, d

    def _standardize(self, X):
        return (np.asarray(X, float) - self.x_mean) / self.x_std

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        single = X.ndim == 1
        _, act = self._forward(self._standardize(np.atleast_2d(X)))
        out = self.y_mean + self.y_std * act[-1][:, 0]
        return out[0] if single else out

    __call__ = predict

    def input_gradient(self, x) -> np.ndarray:
        """Exact gradient of the prediction with respect to raw inputs."""
        x = np.asarray(x, float)
        single = x.ndim == 1
        z = self._standardize(np.atleast_2d(x))
        pre, act = self._forward(z)
        _, _, dz = self._backward(pre, act, np.ones((z.shape[0], 1)))
        g = self.y_std * dz / self.x_std
        return g[0] if single else g

    def save(self, path) -> None:
        header = {"kind": "mlp", "sizes": self.sizes, "y_mean": self.y_mean, "y_std": self.y_std,
                  "train_loss": self.train_loss}
        arrays = [self.x_mean, self.x_std] + [a for wb in zip(self.weights, self.biases) for a in wb]
        _write_model(path, header, arrays)


def _write_model(path, header, arrays):
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC + struct.pack("<Q", len(blob)) + blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_model(path):
    """Load a model written by ``MlpModel.save`` or ``save_linear``."""
    from .linear import LinearModel

    raw = Path(path).read_bytes()
    if raw[:16] != MODEL_MAGIC:
        raise ValueError(f"{path}: not a model file")
    (n,) = struct.unpack("<Q", raw[16:24])
    header = json.loads(raw[24 : 24 + n])
    flat = np.frombuffer(raw, dtype="<f8", offset=24 + n).astype(float)
    if header["kind"] == "linear":
        k = header["k"]
        return LinearModel(flat[:k].copy(), header["intercept"])
    sizes = header["sizes"]
    pos = 0

    def take(count, shape):
        nonlocal pos
        out = flat[pos : pos + count].reshape(shape).copy()
        pos += count
        return out

    x_mean, x_std = take(sizes[0], (sizes[0],)), take(sizes[0], (sizes[0],))
    W, B = [], []
    for i, o in zip(sizes[:-1], sizes[1:]):
        W.append(take(i * o, (i, o)))
        B.append(take(o, (o,)))
    return MlpModel(W, B, x_mean, x_std, header["y_mean"], header["y_std"], header["train_loss"])


def save_linear(model, path) -> None:
    _write_model(path, {"kind": "linear", "k": int(model.coef.size), "intercept": model.intercept},
                 [model.coef])


def init_mlp(sizes, gen: np.random.Generator, x_mean, x_std, y_mean=0.0, y_std=1.0) -> MlpModel:
    """Uniform fan-in initialization with a zero output layer."""
    W, B = [], []
    for l, (i, o) in enumerate(zip(sizes[:-1], sizes[1:])):
        if l == len(sizes) - 2:
            W.append(np.zeros((i, o)))
        else:
            W.append(gen.uniform(-1, 1, (i, o)) / np.sqrt(i))
        B.append(np.zeros(o))
    return MlpModel(W, B, np.asarray(x_mean, float), np.asarray(x_std, float), y_mean, y_std)


def _stats(a, axis=0):
    mu, sd = a.mean(axis=axis), a.std(axis=axis)
    return mu, np.where(sd > 0, sd, 1.0)


def fit_mlp(X, y, hidden=(64, 64), config: TrainConfig = TrainConfig(), *,
            standardize_labels: bool = True) -> MlpModel:
    """Minimize mean squared error plus ridge on weights by Adam.

    Mini-batches are a fresh seeded permutation of the sample each epoch.
    Raises FloatingPointError with the epoch index if the loss diverges.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (m, k) and y (m,)")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training data")
    gen = make_stream(config.seed, stream_id(TRAINING, 0)).generator()
    x_mean, x_std = _stats(X)
    if standardize_labels:
        y_mean, y_std = _stats(y)
        y_mean, y_std = float(y_mean), float(y_std)
    else:
        y_mean, y_std = 0.0, 1.0
    model = init_mlp([X.shape[1], *hidden, 1], gen, x_mean, x_std, y_mean, y_std)
    Z = (X - x_mean) / x_std
    t = (y - y_mean) / y_std
    params = [p for wb in zip(model.weights, model.biases) for p in wb]
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    m = X.shape[0]
    bs = min(config.batch_size, m)
    decay = 1.0
    if config.lr_final is not None:
        decay = (config.lr_final / config.lr) ** (1.0 / max(config.epochs - 1, 1))
    lr = config.lr
    step = 0
    loss = np.nan
    for epoch in range(config.epochs):
        perm = gen.permutation(m)
        total = 0.0
        for lo in range(0, m, bs):
            idx = perm[lo : lo + bs]
            zb, tb = Z[idx], t[idx]
            pre, act = model._forward(zb)
            resid = act[-1][:, 0] - tb
            gW, gb, _ = model._backward(pre, act, (2.0 / idx.size) * resid[:, None])
            for l, W in enumerate(model.weights):
                gW[l] = gW[l] + 2.0 * config.ridge * W
            grads = [g for wb in zip(gW, gb) for g in wb]
            step += 1
            c1 = 1 - config.beta1**step
            c2 = 1 - config.beta2**step
            for p, g, a, v in zip(params, grads, m1, m2):
                a *= config.beta1
                a += (1 - config.beta1) * g
                v *= config.beta2
                v += (1 - config.beta2) * g * g
                p -= lr * (a / c1) / (np.sqrt(v / c2) + config.eps)
            total += float(resid @ resid)
        loss = total / m + config.ridge * sum(float((W * W).sum()) for W in model.weights)
        if not np.isfinite(loss):
            raise FloatingPointError(f"training loss diverged at epoch {epoch}")
        lr *= decay
    model.train_loss = loss * y_std**2
    return model


@dataclass(frozen=True)
class ConstantPredictor:
    value: float

    def predict(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.value)

    __call__ = predict

    def input_gradient(self, x):
        return np.zeros_like(np.asarray(x, float))


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
