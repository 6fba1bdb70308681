"""Forward and backward passes for the five CNN layer primitives.

Everything here is a pure function over numpy arrays (NCHW layout,
row-major).  Backward functions return gradients for every operand and
never mutate their inputs; dtype follows the input arrays so the same
code serves float32 training and float64 gradient checking.
"""

import numpy as np


class ShapeError(ValueError):
    """Operand shapes disagree; the message names the offending axes."""


class DegenerateBatchError(ValueError):
    """Batch statistics requested over a batch of size 1."""


class ParameterError(ValueError):
    """A layer hyperparameter is outside its legal range."""


def conv2d(x, kernels, bias):
    """Same-padded stride-1 convolution: (n,c,h,w) * (k,c,3,3) -> (n,k,h,w)."""
    if x.ndim != 4:
        raise ShapeError(f"conv2d: input must be 4-d NCHW, got shape {x.shape}")
    if kernels.ndim != 4 or kernels.shape[2:] != (3, 3):
        raise ShapeError(f"conv2d: kernels must be (k, c, 3, 3), got shape {kernels.shape}")
    if x.shape[1] != kernels.shape[1]:
        raise ShapeError(
            f"conv2d: input channel axis 1 (size {x.shape[1]}) != "
            f"kernel channel axis 1 (size {kernels.shape[1]})"
        )
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(
            f"conv2d: bias shape {bias.shape} != (out_channels,) = ({kernels.shape[0]},)"
        )
    out, _ = conv2d_with_cols(x, kernels, bias)
    return out


def _work_view(work, key, shape, dtype):
    """Zero-initialized array of `shape`, reused from `work[key]` when given.

    Reused buffers keep their zero borders valid because every caller of a
    given key only ever writes the same interior region (batch size may
    shrink but the per-sample layout never changes).
    """
    size = 1
    for dim in shape:
        size *= dim
    if work is None:
        return np.zeros(shape, dtype=dtype)
    buf = work.get(key)
    if buf is None or buf.dtype != np.dtype(dtype) or buf.size < size:
        buf = np.zeros(max(size, 1), dtype=dtype)
        work[key] = buf
    return buf[:size].reshape(shape)


def _im2col(x, work=None):
    """(n,c,h,w) -> (n*h*w, 9*c) patch matrix for same-padded 3x3 windows.

    Patches are laid out channels-last: row r holds the 3x3 window around
    output position r with the channel axis innermost, which keeps the
    gather's inner copy runs long.
    """
    n, c, h, w = x.shape
    x_pad = _work_view(work, "x_pad", (n, h + 2, w + 2, c), x.dtype)
    x_pad[:, 1:-1, 1:-1, :] = x.transpose(0, 2, 3, 1)
    sn, sh, sw, sc = x_pad.strides
    patches = np.lib.stride_tricks.as_strided(
        x_pad,
        shape=(n, h, w, 3, 3, c),
        strides=(sn, sh, sw, sh, sw, sc),
        writeable=False,
    )
    cols = _work_view(work, "cols", (n * h * w, 9 * c), x.dtype)
    np.copyto(cols.reshape(n, h, w, 3, 3, c), patches)
    return cols


def _kernel_matrix(kernels):
    """(k,c,3,3) -> (9*c, k) operand matching the _im2col row layout."""
    k, c = kernels.shape[:2]
    return np.ascontiguousarray(kernels.transpose(2, 3, 1, 0)).reshape(9 * c, k)


def conv2d_with_cols(x, kernels, bias, work=None):
    """conv2d that also returns the patch matrix for reuse in backward.

    `work` is an optional scratch-buffer dict owned by a single caller;
    passing it avoids reallocating the large intermediates every call.
    Callers sharing a model across threads must not share `work`.
    """
    n, c, h, w = x.shape
    k = kernels.shape[0]
    cols = _im2col(x, work)
    # one GEMM over all patches: (n*h*w, 9*c) @ (9*c, k)
    gemm = _work_view(work, "gemm", (n * h * w, k), x.dtype)
    np.matmul(cols, _kernel_matrix(kernels), out=gemm)
    gemm += bias
    out = _work_view(work, "out", (n, k, h, w), x.dtype)
    np.copyto(out, gemm.reshape(n, h, w, k).transpose(0, 3, 1, 2))
    return out, cols


def conv2d_backward(x, kernels, upstream, cols=None, work=None, need_input_grad=True):
    """Gradients of conv2d for (input, kernels, bias).

    `cols` may pass the patch matrix already built by conv2d_with_cols;
    omitted, it is rebuilt from x.  With need_input_grad=False the input
    gradient is skipped and returned as None (first-layer case).
    """
    n, c, h, w = x.shape
    k = kernels.shape[0]
    if upstream.shape != (n, k, h, w):
        raise ShapeError(
            f"conv2d_backward: upstream shape {upstream.shape} != output shape {(n, k, h, w)}"
        )
    if cols is None:
        cols = _im2col(x, work)
    up_cols = _work_view(work, "up_cols", (n * h * w, k), upstream.dtype)
    np.copyto(up_cols.reshape(n, h, w, k), upstream.transpose(0, 2, 3, 1))
    d_km = up_cols.T @ cols                              # (k, 9*c)
    d_kernels = np.ascontiguousarray(
        d_km.reshape(k, 3, 3, c).transpose(0, 3, 1, 2)
    )
    d_bias = upstream.sum(axis=(0, 2, 3))
    if not need_input_grad:
        return None, d_kernels, d_bias

    # input gradient is the correlation of upstream with spatially
    # flipped kernels, channels swapped: itself a same-padded conv
    flipped = np.ascontiguousarray(kernels[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    inner = None
    if work is not None:
        inner = work.setdefault("input_grad_work", {})
    d_x, _ = conv2d_with_cols(upstream, flipped, np.zeros(c, dtype=upstream.dtype), inner)
    return d_x, d_kernels, d_bias


def _pool_windows(x):
    """Reshape (n,c,h,w) into (n,c,h2,w2,4) windows in row-major scan order.

    Odd trailing rows/columns are dropped (floor semantics).
    """
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    xe = x[:, :, : h2 * 2, : w2 * 2]
    return (
        xe.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4),
        h2,
        w2,
    )


def maxpool2d(x):
    """2x2 stride-2 max pooling; halves H and W (floor on odd extents)."""
    if x.ndim != 4:
        raise ShapeError(f"maxpool2d: input must be 4-d NCHW, got shape {x.shape}")
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ShapeError(f"maxpool2d: spatial size {x.shape[2:]} smaller than the 2x2 window")
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    # reduce over the window axes directly; no materialized window copy
    return x[:, :, : h2 * 2, : w2 * 2].reshape(n, c, h2, 2, w2, 2).max(axis=(3, 5))


def maxpool2d_backward(x, upstream):
    """Route each upstream value to its window's argmax (first index on ties)."""
    n, c, h, w = x.shape
    windows, h2, w2 = _pool_windows(x)
    if upstream.shape != (n, c, h2, w2):
        raise ShapeError(
            f"maxpool2d_backward: upstream shape {upstream.shape} != output shape {(n, c, h2, w2)}"
        )
    arg = windows.argmax(axis=4)                        # first max in scan order
    d_windows = np.zeros_like(windows)
    np.put_along_axis(d_windows, arg[..., None], upstream[..., None], axis=4)
    d_x = np.zeros_like(x)
    d_x[:, :, : h2 * 2, : w2 * 2] = (
        d_windows.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2 * 2, w2 * 2)
    )
    return d_x


def batchnorm2d_train(x, gamma, beta, eps):
    """Per-channel batch normalization over (N,H,W) with batch statistics.

    Returns (y, batch_mean, batch_var, cache); var is the population
    (biased) variance, also used for the running estimate.
    """
    if x.ndim != 4:
        raise ShapeError(f"batchnorm2d: input must be 4-d NCHW, got shape {x.shape}")
    if x.shape[0] < 2:
        raise DegenerateBatchError(
            f"batchnorm2d: train mode needs batch size >= 2, got {x.shape[0]}"
        )
    mean = x.mean(axis=(0, 2, 3))
    var = x.var(axis=(0, 2, 3))
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    y = gamma[None, :, None, None] * x_hat + beta[None, :, None, None]
    return y, mean, var, (x_hat, inv_std, gamma)


def batchnorm2d_infer(x, gamma, beta, running_mean, running_var, eps):
    """Normalize with stored running statistics (inference mode)."""
    inv_std = 1.0 / np.sqrt(running_var + eps)
    x_hat = (x - running_mean[None, :, None, None]) * inv_std[None, :, None, None]
    return gamma[None, :, None, None] * x_hat + beta[None, :, None, None]


def batchnorm2d_backward(cache, upstream):
    """Gradients of batchnorm2d_train for (input, gamma, beta)."""
    x_hat, inv_std, gamma = cache
    d_gamma = (upstream * x_hat).sum(axis=(0, 2, 3))
    d_beta = upstream.sum(axis=(0, 2, 3))
    # d_x through the batch statistics; means run over the (N,H,W) reduction
    du = upstream * gamma[None, :, None, None]
    du_mean = du.mean(axis=(0, 2, 3))
    dux_mean = (du * x_hat).mean(axis=(0, 2, 3))
    d_x = inv_std[None, :, None, None] * (
        du - du_mean[None, :, None, None] - x_hat * dux_mean[None, :, None, None]
    )
    return d_x, d_gamma, d_beta


def dropout(x, rate, train, rng_seed):
    """Inverted dropout.

    Train mode zeroes each element with probability `rate` and scales
    survivors by 1/(1-rate); inference is the identity.  Returns
    (y, scaled_mask) where scaled_mask is None in inference mode.
    """
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout: rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x, None
    rng = np.random.default_rng(rng_seed)
    keep = rng.random(x.shape) >= rate
    scaled_mask = keep.astype(x.dtype) / (1.0 - rate)
    return x * scaled_mask, scaled_mask


def dropout_backward(scaled_mask, upstream):
    if scaled_mask is None:
        return upstream
    return upstream * scaled_mask


def dense(x, weights, bias):
    """Affine map: (n,f) @ (f,g) + (g,) -> (n,g)."""
    if x.ndim != 2 or weights.ndim != 2:
        raise ShapeError(f"dense: expected 2-d operands, got {x.shape} and {weights.shape}")
    if x.shape[1] != weights.shape[0]:
        raise ShapeError(
            f"dense: input feature axis 1 (size {x.shape[1]}) != "
            f"weight axis 0 (size {weights.shape[0]})"
        )
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"dense: bias shape {bias.shape} != ({weights.shape[1]},)")
    return x @ weights + bias


def dense_backward(x, weights, upstream):
    """Gradients of dense for (input, weights, bias)."""
    if upstream.shape != (x.shape[0], weights.shape[1]):
        raise ShapeError(
            f"dense_backward: upstream shape {upstream.shape} != "
            f"output shape {(x.shape[0], weights.shape[1])}"
        )
    return upstream @ weights.T, x.T @ upstream, upstream.sum(axis=0)


def relu(x):
    return np.maximum(x, 0)


def relu_backward(x, upstream):
    return upstream * (x > 0)


def softmax(x):
    """Shift-stabilized softmax over the last axis."""
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(probs, upstream):
    """Jacobian-vector product of softmax given its output probabilities."""
    inner = (upstream * probs).sum(axis=-1, keepdims=True)
    return probs * (upstream - inner)
