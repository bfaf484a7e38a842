"""Fully connected regressor trained by full-batch Adam on the MAE loss."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, ValidationError

ACTIVATIONS = ("relu", "linear")


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple = (500, 500)
    activation: str = "relu"
    epochs: int = 700
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    zero_output_init: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"activation must be one of {ACTIVATIONS}")
        if self.epochs < 0 or self.lr <= 0 or any(h < 1 for h in self.hidden):
            raise ValidationError("invalid MLP configuration")


@dataclass(frozen=True)
class MlpModel:
    weights: tuple
    biases: tuple
    config: MlpConfig
    train_curve: np.ndarray = field(default_factory=lambda: np.zeros(0))
    val_curve: np.ndarray = field(default_factory=lambda: np.zeros(0))

    kind = "mlp"

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def predict(self, X):
        return predict_mlp(self, X)


def init_params(sizes, rng, zero_output=False):
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if zero_output and i == len(sizes) - 2:
            w = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X, activation="relu"):
    """Output and the list of pre-activations needed for backprop."""
    h = X
    cache = [X]
    for w, b in zip(weights[:-1], biases[:-1]):
        z = h @ w + b
        h = np.maximum(z, 0.0) if activation == "relu" else z
        cache.append(z)
    return h @ weights[-1] + biases[-1], cache


def mae_loss_and_grad(weights, biases, X, Y, activation="relu"):
    """MAE over all samples and outputs and its (sub)gradient.

    d|r|/dr is taken as 0 at r == 0.
    """
    out, cache = forward(weights, biases, X, activation)
    resid = out - Y
    loss = float(np.mean(np.abs(resid)))
    delta = np.sign(resid) / resid.size
    gw = [None] * len(weights)
    gb = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        z_in = cache[layer]
        if layer == 0:
            h_in = z_in
        else:
            h_in = np.maximum(z_in, 0.0) if activation == "relu" else z_in
        gw[layer] = h_in.T @ delta
        gb[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            if activation == "relu":
                delta = delta * (z_in > 0)
    return loss, gw, gb


class Adam:
    """Bias-corrected Adam, in place on a list of arrays."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def fit_mlp(X, Y, config=MlpConfig(), seed=0, X_val=None, Y_val=None):
    """Train for ``config.epochs`` full-batch steps.

    The per-epoch curves hold the loss of the forward pass that produced each
    step (so ``train_curve[0]`` is the loss at initialisation). Validation MAE
    is recorded on the same parameters when validation data is given.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValidationError("MLP inputs must be finite")
    rng = np.random.default_rng(seed)
    sizes = [X.shape[1], *config.hidden, Y.shape[1]]
    weights, biases = init_params(sizes, rng, config.zero_output_init)
    opt = Adam(weights + biases, config.lr, config.beta1, config.beta2, config.eps)
    has_val = X_val is not None
    train_curve = np.empty(config.epochs)
    val_curve = np.empty(config.epochs if has_val else 0)
    for epoch in range(config.epochs):
        loss, gw, gb = mae_loss_and_grad(weights, biases, X, Y, config.activation)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        train_curve[epoch] = loss
        if has_val:
            pred, _ = forward(weights, biases, X_val, config.activation)
            val_curve[epoch] = np.mean(np.abs(pred - Y_val))
        opt.step(gw + gb)
    params = weights + biases
    if not all(np.all(np.isfinite(p)) for p in params):
        raise DivergenceError(config.epochs)
    return MlpModel(tuple(weights), tuple(biases), config, train_curve, val_curve)


def predict_mlp(model, X):
    out, _ = forward(model.weights, model.biases, np.asarray(X, dtype=float), model.config.activation)
    return out
