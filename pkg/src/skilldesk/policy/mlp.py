"""A small dense network with hand-written backprop.

Hidden layers use tanh so every derivative is smooth, which keeps
finite-difference gradient checks tight. No autodiff framework is
involved anywhere; the backward pass below is the whole story.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatch


class MLP:
    """Fully connected tanh network with a linear output layer."""

    def __init__(self, layer_sizes, rng: np.random.Generator):
        if len(layer_sizes) < 2:
            raise ShapeMismatch("need at least input and output sizes")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Returns (output, cache); cache holds per-layer activations."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.layer_sizes[0]:
            raise ShapeMismatch(
                f"expected input (N, {self.layer_sizes[0]}), got {x.shape}")
        h = x
        cache = [h]
        for i in range(self.n_layers - 1):
            h = np.tanh(h @ self.weights[i] + self.biases[i])
            cache.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        return out, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (weight_grads, bias_grads, grad_input).
        """
        grad_w = [None] * self.n_layers
        grad_b = [None] * self.n_layers
        g = np.asarray(grad_out, dtype=np.float64)

        grad_w[-1] = cache[-1].T @ g
        grad_b[-1] = g.sum(axis=0)
        g = g @ self.weights[-1].T
        for i in range(self.n_layers - 2, -1, -1):
            g = g * (1.0 - cache[i + 1] ** 2)  # tanh'
            grad_w[i] = cache[i].T @ g
            grad_b[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grad_w, grad_b, g

    # flat parameter views, used by the optimizer and the policy store
    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_parameters(self, params) -> None:
        if len(params) != 2 * self.n_layers:
            raise ShapeMismatch(
                f"expected {2 * self.n_layers} arrays, got {len(params)}")
        for i in range(self.n_layers):
            w = np.asarray(params[2 * i], dtype=np.float64)
            b = np.asarray(params[2 * i + 1], dtype=np.float64)
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ShapeMismatch(f"parameter {i} has wrong shape")
            self.weights[i] = w
            self.biases[i] = b


class Adam:
    """Adam with bias correction, operating on a flat parameter list."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads) -> None:
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ShapeMismatch("parameter/gradient count changed mid-run")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
