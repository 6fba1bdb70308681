"""Plain SGD and bias-corrected Adam.

Parameters are updated in place; per the concurrency contract only a
single training coordinator may call step().  Both optimizers are fully
deterministic.
"""

import numpy as np

from .ops import ParameterError, ShapeError


class SGD:
    def __init__(self, learning_rate):
        self.learning_rate = learning_rate

    def step(self, params, grads):
        """params and grads: dicts of shape-congruent arrays, matched by key."""
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(f"sgd: gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
            p -= self.learning_rate * g


class Adam:
    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(f"adam: gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
            m = self._m.get(name)
            if m is None:
                m = self._m[name] = np.zeros_like(p)
                self._v[name] = np.zeros_like(p)
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind, learning_rate):
    if kind == "sgd":
        return SGD(learning_rate)
    if kind == "adam":
        return Adam(learning_rate)
    raise ParameterError(f"unknown optimizer kind {kind!r}")
