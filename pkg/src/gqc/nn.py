"""Plain dense feed-forward networks with manual backpropagation and Adam."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, NumericError, ShapeError

BCE_EPS = 1e-12


def _sigmoid(x):
    # Split by sign so neither branch overflows in exp.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


ACTIVATIONS = {
    "identity": (lambda x: x, lambda x, y: np.ones_like(x)),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0).astype(x.dtype)),
    "sigmoid": (_sigmoid, lambda x, y: y * (1.0 - y)),
    "tanh": (np.tanh, lambda x, y: 1.0 - y * y),
}


@dataclass
class DenseLayer:
    """``activation(x @ weights.T + biases)`` with ``weights`` of shape (out, in)."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"inconsistent layer shapes: weights {self.weights.shape}, biases {self.biases.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise NumericError("layer parameters must be finite")

    @property
    def n_in(self):
        return self.weights.shape[1]

    @property
    def n_out(self):
        return self.weights.shape[0]

    @classmethod
    def glorot(cls, n_in, n_out, activation, rng):
        limit = np.sqrt(6.0 / (n_in + n_out))
        return cls(rng.uniform(-limit, limit, size=(n_out, n_in)), np.zeros(n_out), activation)


@dataclass
class Network:
    """A stack of :class:`DenseLayer`."""

    layers: list = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ShapeError(f"layer of width {a.n_out} feeds a layer expecting {b.n_in}")

    @classmethod
    def from_sizes(cls, sizes, activations, rng):
        """Build a Glorot-initialized network with layer widths ``sizes``.

        ``activations`` has one entry per weight layer, i.e. ``len(sizes) - 1``.
        """
        if len(activations) != len(sizes) - 1:
            raise ShapeError(f"{len(sizes) - 1} layers need as many activations")
        return cls(
            [DenseLayer.glorot(a, b, act, rng) for a, b, act in zip(sizes, sizes[1:], activations)]
        )

    @property
    def sizes(self):
        return [self.layers[0].n_in] + [layer.n_out for layer in self.layers]

    @property
    def n_in(self):
        return self.layers[0].n_in

    @property
    def n_out(self):
        return self.layers[-1].n_out

    def parameters(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` of the live parameter arrays."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.biases]
        return out

    def set_parameters(self, params):
        if len(params) != 2 * len(self.layers):
            raise ShapeError(f"expected {2 * len(self.layers)} arrays, got {len(params)}")
        for i, layer in enumerate(self.layers):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != layer.weights.shape or b.shape != layer.biases.shape:
                raise ShapeError(f"parameter shapes do not match layer {i}")
            layer.weights = np.array(w, dtype=np.float64)
            layer.biases = np.array(b, dtype=np.float64)

    def named_parameters(self, prefix=""):
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"{prefix}layer{i}.weights"] = layer.weights
            out[f"{prefix}layer{i}.biases"] = layer.biases
        return out

    def copy(self):
        return copy.deepcopy(self)

    def _check_input(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_in:
            raise ShapeError(f"expected input of shape (M, {self.n_in}), got {X.shape}")
        return X

    def forward(self, X):
        out = self._check_input(X)
        for layer in self.layers:
            out = ACTIVATIONS[layer.activation][0](out @ layer.weights.T + layer.biases)
        return out

    __call__ = forward


def forward_backward(net, X, upstream):
    """Run ``net`` on ``X`` and backpropagate ``upstream = dL/d(output)``.

    Returns ``(output, dL/dX, grads)`` where ``grads`` follows the layout of
    :meth:`Network.parameters`.
    """
    X = net._check_input(X)
    cache = []
    out = X
    for layer in net.layers:
        pre = out @ layer.weights.T + layer.biases
        post = ACTIVATIONS[layer.activation][0](pre)
        cache.append((out, pre, post))
        out = post

    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != out.shape:
        raise ShapeError(f"upstream gradient shape {upstream.shape} != output shape {out.shape}")

    grads = [None] * (2 * len(net.layers))
    delta = upstream
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        inp, pre, post = cache[i]
        delta = delta * ACTIVATIONS[layer.activation][1](pre, post)
        grads[2 * i] = delta.T @ inp
        grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ layer.weights
    return out, delta, grads


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ShapeError("empty batch")
    return a, b


def mse_loss(x, x_hat):
    """Batch mean of squared Euclidean reconstruction error (summed over features)."""
    x, x_hat = _check_pair(x, x_hat)
    x, x_hat = np.atleast_2d(x), np.atleast_2d(x_hat)
    return float(np.sum((x - x_hat) ** 2) / len(x))


def mse_grad(x, x_hat):
    """dL/dx_hat of :func:`mse_loss`."""
    x, x_hat = _check_pair(x, x_hat)
    x, x_hat = np.atleast_2d(x), np.atleast_2d(x_hat)
    return 2.0 * (x_hat - x) / len(x)


def _check_labels(y):
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("labels must be 0 or 1")


def bce_loss(y, p, eps=BCE_EPS):
    """Mean binary cross entropy with probabilities clamped to [eps, 1 - eps]."""
    y, p = _check_pair(np.ravel(y), np.ravel(p))
    _check_labels(y)
    p = np.clip(p, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def bce_grad(y, p, eps=BCE_EPS):
    """dL/dp of :func:`bce_loss`; zero where the clamp is active."""
    y, p = _check_pair(np.ravel(y), np.ravel(p))
    _check_labels(y)
    inside = (p > eps) & (p < 1.0 - eps)
    pc = np.clip(p, eps, 1.0 - eps)
    grad = (-(y / pc) + (1.0 - y) / (1.0 - pc)) / len(y)
    return np.where(inside, grad, 0.0)


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list = None
    second_moment: list = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


def adam_step(params, grads, state):
    """One Adam update. Returns ``(new_params, new_state)``; inputs are not mutated."""
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameter arrays but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ShapeError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(p)}")
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient")

    m = state.first_moment or [np.zeros_like(p, dtype=np.float64) for p in params]
    v = state.second_moment or [np.zeros_like(p, dtype=np.float64) for p in params]
    if len(m) != len(params):
        raise ShapeError("optimizer state does not match the parameter list")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_m = [b1 * mi + (1.0 - b1) * g for mi, g in zip(m, grads)]
    new_v = [b2 * vi + (1.0 - b2) * g * g for vi, g in zip(v, grads)]
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_params = [
        p - state.learning_rate * (mi / c1) / (np.sqrt(vi / c2) + state.epsilon)
        for p, mi, vi in zip(params, new_m, new_v)
    ]
    new_state = AdamState(
        state.learning_rate, b1, b2, state.epsilon, t, new_m, new_v
    )
    return new_params, new_state
