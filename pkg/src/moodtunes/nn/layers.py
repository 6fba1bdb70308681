"""Layer objects: parameters, forward/backward state, and shape algebra.

A layer owns its parameter arrays (float32 storage by default, cast to
the compute dtype on the way through) plus the cache its backward pass
needs.  Forward caches are overwritten by the next forward call, so a
layer instance serves one in-flight pass at a time; read-only inference
through `Model.predict` copies nothing and is safe to share.
"""

import numpy as np

from . import ops


def he_normal(rng, shape, fan_in, dtype):
    """Standard init for ReLU stacks: N(0, sqrt(2/fan_in))."""
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class Layer:
    """Base: parameterless, shape-preserving."""

    def __init__(self):
        self.params = {}
        self.grads = {}
        # single-coordinator contexts (the training loop) set this so
        # inference passes may also reuse scratch buffers; it must stay
        # False whenever concurrent callers can share the layer
        self.scratch = False

    def forward(self, x, train=False, step_seed=None):
        raise NotImplementedError

    def backward(self, upstream):
        raise NotImplementedError

    def out_shape(self, in_shape):
        return in_shape

    def state_tensors(self):
        """Name -> array for everything serialization must persist."""
        return dict(self.params)


class Conv2D(Layer):
    KERNEL = 3

    def __init__(self, in_channels, out_channels, rng, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = in_channels * self.KERNEL * self.KERNEL
        self.params = {
            "kernels": he_normal(rng, (out_channels, in_channels, 3, 3), fan_in, dtype),
            "bias": np.zeros(out_channels, dtype=dtype),
        }
        self._work = {}
        self._cols = None

    def forward(self, x, train=False, step_seed=None):
        self._x = x
        # scratch buffers only under a single coordinator (training, or
        # eval passes inside it); plain inference must stay reentrant
        work = self._work if (train or self.scratch) else None
        out, cols = ops.conv2d_with_cols(
            x, self.params["kernels"].astype(x.dtype), self.params["bias"].astype(x.dtype),
            work=work,
        )
        self._cols = cols if train else None
        return out

    def backward(self, upstream, need_input_grad=True):
        d_x, d_k, d_b = ops.conv2d_backward(
            self._x,
            self.params["kernels"].astype(upstream.dtype),
            upstream,
            cols=self._cols,
            work=self._work if self._cols is not None else None,
            need_input_grad=need_input_grad,
        )
        self._cols = None
        self.grads = {"kernels": d_k, "bias": d_b}
        return d_x

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_channels:
            raise ops.ShapeError(f"conv2d: expected {self.in_channels} input channels, got {c}")
        return (self.out_channels, h, w)


class MaxPool2D(Layer):
    def forward(self, x, train=False, step_seed=None):
        self._x = x
        return ops.maxpool2d(x)

    def backward(self, upstream):
        return ops.maxpool2d_backward(self._x, upstream)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        return (c, h // 2, w // 2)


class BatchNorm2D(Layer):
    def __init__(self, channels, eps=1e-5, momentum=0.9, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.params = {
            "gamma": np.ones(channels, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self.running_mean = np.zeros(channels, dtype=np.float64)
        self.running_var = np.ones(channels, dtype=np.float64)

    def forward(self, x, train=False, step_seed=None):
        gamma = self.params["gamma"].astype(x.dtype)
        beta = self.params["beta"].astype(x.dtype)
        if train:
            y, mean, var, self._cache = ops.batchnorm2d_train(x, gamma, beta, self.eps)
            m = self.momentum
            self.running_mean = m * self.running_mean + (1 - m) * mean.astype(np.float64)
            self.running_var = m * self.running_var + (1 - m) * var.astype(np.float64)
            return y
        return ops.batchnorm2d_infer(
            x, gamma, beta,
            self.running_mean.astype(x.dtype), self.running_var.astype(x.dtype), self.eps,
        )

    def backward(self, upstream):
        d_x, d_gamma, d_beta = ops.batchnorm2d_backward(self._cache, upstream)
        self.grads = {"gamma": d_gamma, "beta": d_beta}
        return d_x

    def state_tensors(self):
        return {
            **self.params,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }


class Dropout(Layer):
    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ops.ParameterError(f"dropout: rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train=False, step_seed=None):
        y, self._mask = ops.dropout(x, self.rate, train, step_seed)
        return y

    def backward(self, upstream):
        return ops.dropout_backward(self._mask, upstream)


class Dense(Layer):
    def __init__(self, in_features, out_features, rng, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "weights": he_normal(rng, (in_features, out_features), in_features, dtype),
            "bias": np.zeros(out_features, dtype=dtype),
        }

    def forward(self, x, train=False, step_seed=None):
        self._x = x
        return ops.dense(x, self.params["weights"].astype(x.dtype), self.params["bias"].astype(x.dtype))

    def backward(self, upstream):
        d_x, d_w, d_b = ops.dense_backward(self._x, self.params["weights"].astype(upstream.dtype), upstream)
        self.grads = {"weights": d_w, "bias": d_b}
        return d_x

    def out_shape(self, in_shape):
        (f,) = in_shape
        if f != self.in_features:
            raise ops.ShapeError(f"dense: expected {self.in_features} input features, got {f}")
        return (self.out_features,)


class ReLU(Layer):
    def forward(self, x, train=False, step_seed=None):
        self._x = x
        return ops.relu(x)

    def backward(self, upstream):
        return ops.relu_backward(self._x, upstream)


class Softmax(Layer):
    def forward(self, x, train=False, step_seed=None):
        self._probs = ops.softmax(x)
        return self._probs

    def backward(self, upstream):
        return ops.softmax_backward(self._probs, upstream)


class Flatten(Layer):
    def forward(self, x, train=False, step_seed=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, upstream):
        return upstream.reshape(self._shape)

    def out_shape(self, in_shape):
        n = 1
        for d in in_shape:
            n *= d
        return (n,)
