"""Small dense networks with hand-written forward/backward passes.

Everything is float64 so analytic gradients can be checked tightly against
central finite differences.
"""
from __future__ import annotations

import math

import numpy as np


class Mlp:
    """Fully connected net: ReLU hidden layers, tanh or linear output."""

    def __init__(self, layer_sizes: list[int], output: str = "linear", rng=None):
        if output not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {output!r}")
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        rng = np.random.default_rng(rng)
        self.layer_sizes = list(layer_sizes)
        self.output = output
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            w = rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray):
        """Returns (batch output, cache for backward)."""
        a = np.asarray(x, dtype=np.float64)
        pre = []
        acts = [a]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            if i < last:
                a = np.maximum(z, 0.0)
            elif self.output == "tanh":
                a = np.tanh(z)
            else:
                a = z
            acts.append(a)
        return a, (pre, acts)

    def backward(self, cache, dout: np.ndarray):
        """Gradients for a scalar objective with d(obj)/d(output) = ``dout``.

        Returns (dweights, dbiases, dinput).
        """
        pre, acts = cache
        last = len(self.weights) - 1
        d = np.asarray(dout, dtype=np.float64)
        if self.output == "tanh":
            y = acts[-1]
            d = d * (1.0 - y * y)
        dws = [None] * len(self.weights)
        dbs = [None] * len(self.biases)
        for i in range(last, -1, -1):
            dws[i] = acts[i].T @ d
            dbs[i] = d.sum(axis=0)
            d = d @ self.weights[i].T
            if i > 0:
                d = d * (pre[i - 1] > 0.0)
        return dws, dbs, d

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def clone(self) -> "Mlp":
        other = Mlp.__new__(Mlp)
        other.layer_sizes = list(self.layer_sizes)
        other.output = self.output
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def copy_from(self, other: "Mlp"):
        for dst, src in zip(self.params(), other.params()):
            dst[...] = src


def soft_update(target: Mlp, source: Mlp, tau: float):
    """Blend target parameters toward the source: t <- tau*s + (1-tau)*t."""
    for dst, src in zip(target.params(), source.params()):
        dst *= 1.0 - tau
        dst += tau * src


class Adam:
    """Adam optimizer over a fixed list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
