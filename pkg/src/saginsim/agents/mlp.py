"""Small fully connected network in numpy: tanh hidden layers, linear output, Adam."""

from __future__ import annotations

import numpy as np


class Mlp:
    def __init__(self, sizes, rng: np.random.Generator | None = None, out_scale: float | None = None):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.W, self.b = [], []
        for i, (a, c) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            lim = np.sqrt(6.0 / (a + c))
            if i == len(self.sizes) - 2 and out_scale is not None:
                lim = out_scale
            self.W.append(rng.uniform(-lim, lim, size=(a, c)))
            self.b.append(np.zeros(c))

    @property
    def params(self) -> list:
        out = []
        for W, b in zip(self.W, self.b):
            out += [W, b]
        return out

    def copy(self) -> "Mlp":
        net = Mlp.__new__(Mlp)
        net.sizes = self.sizes
        net.W = [w.copy() for w in self.W]
        net.b = [b.copy() for b in self.b]
        return net

    def forward(self, x, cache: bool = False):
        x = np.asarray(x, float)
        squeeze = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.sizes[0]:
            raise ValueError(f"input dim {h.shape[1]} != {self.sizes[0]}")
        acts = [h]
        last = len(self.W) - 1
        for i, (W, b) in enumerate(zip(self.W, self.b)):
            h = h @ W + b
            if i < last:
                h = np.tanh(h)
            acts.append(h)
        out = h[0] if squeeze else h
        return (out, acts) if cache else out

    def backward(self, acts, grad_out):
        """Reverse pass from dL/d(output); returns (param grads aligned with params, dL/dx)."""
        g = np.atleast_2d(np.asarray(grad_out, float))
        if g.shape != acts[-1].shape:
            raise ValueError("upstream gradient shape mismatch")
        grads = [None] * (2 * len(self.W))
        last = len(self.W) - 1
        for i in range(last, -1, -1):
            if i < last:
                g = g * (1.0 - acts[i + 1] ** 2)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.W[i].T
        return grads, g

    def soft_update_from(self, src: "Mlp", tau: float) -> None:
        for p, q in zip(self.params, src.params):
            p *= (1.0 - tau)
            p += tau * q


def mlp_forward(net: Mlp, x):
    return net.forward(x)


def mlp_backward(net: Mlp, x, grad_out):
    _, acts = net.forward(np.atleast_2d(x), cache=True)
    return net.backward(acts, grad_out)


class Adam:
    def __init__(self, params, lr: float = 1e-3, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
