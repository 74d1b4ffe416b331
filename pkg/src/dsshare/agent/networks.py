"""Two-hidden-layer MLPs over flat parameter vectors, plus Adam."""

from __future__ import annotations

import numpy as np

from . import kernels


def param_count(sizes) -> int:
    d_in, h1, h2, d_out = sizes
    return d_in * h1 + h1 + h1 * h2 + h2 + h2 * d_out + d_out


def init_mlp(sizes, rng: np.random.Generator) -> np.ndarray:
    """Uniform fan-in initialization, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
    theta = np.empty(param_count(sizes))
    views = kernels.unpack(theta, sizes)
    fan_ins = (sizes[0], sizes[0], sizes[1], sizes[1], sizes[2], sizes[2])
    for view, fan_in in zip(views, fan_ins):
        bound = 1.0 / np.sqrt(fan_in)
        view[...] = rng.uniform(-bound, bound, view.shape)
    return theta


def forward(theta: np.ndarray, sizes, x: np.ndarray):
    """Network output for each row of ``x`` and the activations backward needs."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    batch = x.shape[0]
    h1 = np.empty((batch, sizes[1]))
    h2 = np.empty((batch, sizes[2]))
    out = np.empty(batch)
    kernels.mlp_forward(theta, sizes, x, h1, h2, out)
    return out, (x, h1, h2)


def backward(theta: np.ndarray, sizes, cache, dout: np.ndarray, want_dx: bool = False):
    """Gradient of ``sum(dout * out)`` w.r.t. the parameters (and inputs)."""
    x, h1, h2 = cache
    grad = np.empty_like(theta)
    dx = np.empty_like(x) if want_dx else None
    kernels.mlp_backward(theta, sizes, x, h1, h2, np.ascontiguousarray(dout, dtype=np.float64), grad, dx)
    return grad, dx


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Adam:
    def __init__(self, size: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> None:
        """Descend ``grad`` in place."""
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad * grad
        lr_t = self.lr * np.sqrt(1.0 - self.beta2**self.t) / (1.0 - self.beta1**self.t)
        theta -= lr_t * self.m / (np.sqrt(self.v) + self.eps)

    def state(self) -> dict:
        return {"m": self.m, "v": self.v, "t": self.t}
