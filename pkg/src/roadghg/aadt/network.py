"""Dense feed-forward network with hand-written backpropagation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "linear")


@dataclass
class Layer:
    weights: np.ndarray  # (n_in, n_out)
    bias: np.ndarray  # (n_out,)
    activation: str = "relu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ValueError(f"layer shapes do not match: W{self.weights.shape}, b{self.bias.shape}")

    def copy(self) -> "Layer":
        return Layer(self.weights.copy(), self.bias.copy(), self.activation)


def check_chain(layers, n_in: int, n_out: int) -> None:
    width = n_in
    for i, layer in enumerate(layers):
        if layer.weights.shape[0] != width:
            raise ValueError(f"layer {i} expects {layer.weights.shape[0]} inputs, previous layer gives {width}")
        width = layer.weights.shape[1]
    if width != n_out:
        raise ValueError(f"network produces {width} outputs, expected {n_out}")


def init_layers(sizes, rng: np.random.Generator) -> list[Layer]:
    """He-initialised ReLU layers with a linear output layer."""
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = i == len(sizes) - 2
        w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        layers.append(Layer(w, np.zeros(n_out), "linear" if last else "relu"))
    return layers


def forward(layers, x: np.ndarray, keep: bool = False):
    """Returns the output, plus per-layer (input, pre-activation) when ``keep``."""
    a = np.asarray(x, dtype=np.float64)
    cache = []
    for layer in layers:
        z = a @ layer.weights + layer.bias
        if keep:
            cache.append((a, z))
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return (a, cache) if keep else a


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


def backward(layers, cache, pred: np.ndarray, target: np.ndarray):
    """Gradients of ``mse(pred, target)`` w.r.t. every layer's (weights, bias)."""
    grad = 2.0 * (pred - target) / pred.size
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        a_in, z = cache[i]
        if layer.activation == "relu":
            grad = grad * (z > 0)
        grads[i] = (a_in.T @ grad, grad.sum(axis=0))
        if i:
            grad = grad @ layer.weights.T
    return grads


def loss_and_grads(layers, x, target):
    pred, cache = forward(layers, x, keep=True)
    return mse(pred, target), backward(layers, cache, pred, target)


class Adam:
    def __init__(self, layers, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = learning_rate, beta1, beta2, eps
        self.t = 0
        self.m = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in layers]
        self.v = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in layers]

    def step(self, layers, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for layer, g, m, v in zip(layers, grads, self.m, self.v):
            for param, gp, mp, vp in ((layer.weights, g[0], m[0], v[0]), (layer.bias, g[1], m[1], v[1])):
                mp *= self.b1
                mp += (1.0 - self.b1) * gp
                vp *= self.b2
                vp += (1.0 - self.b2) * gp * gp
                param -= self.lr * (mp / c1) / (np.sqrt(vp / c2) + self.eps)
