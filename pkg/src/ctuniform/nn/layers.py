"""Layer primitives implemented on numpy arrays.

Every tensor is channel-first: [B, C, W, H, D] for convolutional layers and
[B, F] after flattening. All reductions run in a fixed order so repeated runs
produce bit-identical results.

The 3-D convolution is unpadded with a fixed 3x3x3 kernel. Forward and
backward both decompose into the 27 kernel offsets; each offset contributes a
single matrix product over the flattened output positions, which keeps the
arithmetic inside BLAS without any im2col blowup.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, DegenerateBatchError, ShapeError

KERNEL = 3


def glorot_init(shape, rng, dtype=np.float32):
    """Uniform Glorot draw; fans include the receptive field for rank-5 shapes."""
    shape = tuple(int(s) for s in shape)
    if len(shape) == 2:
        fan_in, fan_out = shape
    elif len(shape) == 5:
        receptive = shape[2] * shape[3] * shape[4]
        fan_in = shape[1] * receptive
        fan_out = shape[0] * receptive
    else:
        raise ConfigError(f"no fan rule for shape {shape}")
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def one_hot(labels, classes, dtype=np.float32):
    labels = np.asarray(labels)
    out = np.zeros((labels.shape[0], int(classes)), dtype=dtype)
    out[np.arange(labels.shape[0]), labels] = 1
    return out


def mae_loss(probs, targets):
    """Mean absolute error over all class entries and its gradient."""
    if probs.shape != targets.shape:
        raise ShapeError(f"probs {probs.shape} vs targets {targets.shape}")
    diff = probs - targets
    loss = float(np.mean(np.abs(diff)))
    grad = np.sign(diff).astype(probs.dtype) / probs.dtype.type(diff.size)
    return loss, grad


def _as_batched(x):
    if x.ndim == 4:
        return x[None], True
    if x.ndim == 5:
        return x, False
    raise ShapeError(f"expected rank 4 or 5 input, got rank {x.ndim}")


def conv3d_forward(x, w, b):
    """Valid (unpadded) 3x3x3 convolution."""
    x, squeeze = _as_batched(np.asarray(x))
    nb, cin, wx, hx, dx = x.shape
    if w.ndim != 5 or w.shape[1:] != (cin, KERNEL, KERNEL, KERNEL):
        raise ShapeError(f"weight shape {w.shape} does not match input channels {cin}")
    cout = w.shape[0]
    if b.shape != (cout,):
        raise ShapeError(f"bias shape {b.shape} does not match {cout} filters")
    wo, ho, do = wx - 2, hx - 2, dx - 2
    if min(wo, ho, do) < 1:
        raise ShapeError(f"spatial extents {(wx, hx, dx)} too small for a 3x3x3 kernel")
    m = wo * ho * do
    out = np.empty((nb, cout, m), dtype=x.dtype)
    out[:] = b[None, :, None]
    for kx in range(KERNEL):
        for ky in range(KERNEL):
            for kz in range(KERNEL):
                view = x[:, :, kx:kx + wo, ky:ky + ho, kz:kz + do].reshape(nb, cin, m)
                out += w[:, :, kx, ky, kz] @ view
    out = out.reshape(nb, cout, wo, ho, do)
    return out[0] if squeeze else out


def conv3d_backward(x, w, grad_out):
    """Gradients of conv3d_forward with respect to x, w, b."""
    x, squeeze = _as_batched(np.asarray(x))
    grad_out = np.asarray(grad_out)
    if squeeze:
        grad_out = grad_out[None]
    nb, cin, wx, hx, dx = x.shape
    cout = w.shape[0]
    wo, ho, do = wx - 2, hx - 2, dx - 2
    m = wo * ho * do
    gflat = grad_out.reshape(nb, cout, m)
    grad_b = gflat.sum(axis=(0, 2))
    grad_w = np.empty_like(w)
    grad_x = np.zeros_like(x)
    for kx in range(KERNEL):
        for ky in range(KERNEL):
            for kz in range(KERNEL):
                view = x[:, :, kx:kx + wo, ky:ky + ho, kz:kz + do].reshape(nb, cin, m)
                grad_w[:, :, kx, ky, kz] = np.einsum(
                    "bom,bcm->oc", gflat, view, optimize=True
                )
                spread = (w[:, :, kx, ky, kz].T @ gflat).reshape(nb, cin, wo, ho, do)
                grad_x[:, :, kx:kx + wo, ky:ky + ho, kz:kz + do] += spread
    if squeeze:
        grad_x = grad_x[0]
    return grad_x, grad_w, grad_b


def maxpool3d_forward(x):
    """2x2x2 max pooling with stride 2; odd tails are dropped."""
    x, squeeze = _as_batched(np.asarray(x))
    nb, c, wx, hx, dx = x.shape
    if min(wx, hx, dx) < 2:
        raise ShapeError(f"spatial extents {(wx, hx, dx)} too small for 2x2x2 pooling")
    wo, ho, do = wx // 2, hx // 2, dx // 2
    windows = (
        x[:, :, : 2 * wo, : 2 * ho, : 2 * do]
        .reshape(nb, c, wo, 2, ho, 2, do, 2)
        .transpose(0, 1, 2, 4, 6, 3, 5, 7)
        .reshape(nb, c, wo, ho, do, 8)
    )
    # argmax returns the first maximum, i.e. the lowest window offset on ties
    idx = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    if squeeze:
        return out[0], idx[0]
    return out, idx


def maxpool3d_backward(idx, x_shape, grad_out):
    """Scatter gradients back to the argmax positions (windows are disjoint)."""
    squeeze = len(x_shape) == 4
    if squeeze:
        x_shape = (1,) + tuple(x_shape)
        idx = idx[None]
        grad_out = grad_out[None]
    nb, c, wx, hx, dx = x_shape
    _, _, wo, ho, do = grad_out.shape
    grad_x = np.zeros(x_shape, dtype=grad_out.dtype)
    bi = np.arange(nb).reshape(nb, 1, 1, 1, 1)
    ci = np.arange(c).reshape(1, c, 1, 1, 1)
    wi = 2 * np.arange(wo).reshape(1, 1, wo, 1, 1) + idx // 4
    hi = 2 * np.arange(ho).reshape(1, 1, 1, ho, 1) + (idx // 2) % 2
    di = 2 * np.arange(do).reshape(1, 1, 1, 1, do) + idx % 2
    grad_x[bi, ci, wi, hi, di] = grad_out
    return grad_x[0] if squeeze else grad_x


class Param:
    """A trainable array with its most recent gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        self.name = name
        self.value = value
        self.grad = None


class Conv3d:
    def __init__(self, in_channels, out_channels, name, dtype=np.float32):
        self.w = Param(name + ".w", np.zeros((out_channels, in_channels, KERNEL, KERNEL, KERNEL), dtype))
        self.b = Param(name + ".b", np.zeros(out_channels, dtype))
        self._x = None

    def init_params(self, rng):
        self.w.value = glorot_init(self.w.value.shape, rng, self.w.value.dtype)
        self.b.value[:] = 0

    def forward(self, x, train=False, rng=None):
        self._x = x
        return conv3d_forward(x, self.w.value, self.b.value)

    def backward(self, grad):
        grad_x, self.w.grad, self.b.grad = conv3d_backward(self._x, self.w.value, grad)
        return grad_x

    def params(self):
        return [self.w, self.b]


class MaxPool3d:
    def __init__(self):
        self._idx = None
        self._shape = None

    def forward(self, x, train=False, rng=None):
        out, self._idx = maxpool3d_forward(x)
        self._shape = x.shape
        return out

    def backward(self, grad):
        return maxpool3d_backward(self._idx, self._shape, grad)

    def params(self):
        return []


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, grad):
        return grad * self._mask

    def params(self):
        return []


class BatchNorm3d:
    """Per-channel normalization over batch and spatial axes (biased variance)."""

    def __init__(self, channels, name, momentum=0.9, eps=1e-5, dtype=np.float32):
        self.gamma = Param(name + ".gamma", np.ones(channels, dtype))
        self.beta = Param(name + ".beta", np.zeros(channels, dtype))
        self.running_mean = np.zeros(channels, dtype)
        self.running_var = np.ones(channels, dtype)
        self.momentum = momentum
        self.eps = eps
        self.name = name
        self._cache = None

    def init_params(self, rng):
        self.gamma.value[:] = 1
        self.beta.value[:] = 0
        self.running_mean[:] = 0
        self.running_var[:] = 1

    def _chan(self, arr, ndim):
        return arr.reshape((1, arr.shape[0]) + (1,) * (ndim - 2))

    def forward(self, x, train=False, rng=None):
        axes = tuple(i for i in range(x.ndim) if i != 1)
        if train:
            count = x.size // x.shape[1]
            if count < 2:
                raise DegenerateBatchError(
                    f"batch statistics need at least 2 values per channel, got {count}"
                )
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean *= self.running_mean.dtype.type(self.momentum)
            self.running_mean += self.running_mean.dtype.type(1 - self.momentum) * mean
            self.running_var *= self.running_var.dtype.type(self.momentum)
            self.running_var += self.running_var.dtype.type(1 - self.momentum) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + var.dtype.type(self.eps))
        xhat = (x - self._chan(mean, x.ndim)) * self._chan(inv_std, x.ndim)
        if train:
            self._cache = (xhat, inv_std, x.size // x.shape[1])
        return self._chan(self.gamma.value, x.ndim) * xhat + self._chan(self.beta.value, x.ndim)

    def backward(self, grad):
        xhat, inv_std, count = self._cache
        axes = tuple(i for i in range(grad.ndim) if i != 1)
        self.gamma.grad = (grad * xhat).sum(axis=axes)
        self.beta.grad = grad.sum(axis=axes)
        n = grad.dtype.type(count)
        term = (
            n * grad
            - self._chan(self.beta.grad, grad.ndim)
            - xhat * self._chan(self.gamma.grad, grad.ndim)
        )
        scale = self._chan(self.gamma.value * inv_std, grad.ndim) / n
        return scale * term

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [
            (self.name + ".running_mean", self.running_mean),
            (self.name + ".running_var", self.running_var),
        ]


class Flatten:
    def __init__(self):
        self._shape = None

    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)

    def params(self):
        return []


class Dense:
    def __init__(self, in_features, out_features, name, dtype=np.float32):
        self.w = Param(name + ".w", np.zeros((in_features, out_features), dtype))
        self.b = Param(name + ".b", np.zeros(out_features, dtype))
        self._x = None

    def init_params(self, rng):
        self.w.value = glorot_init(self.w.value.shape, rng, self.w.value.dtype)
        self.b.value[:] = 0

    def forward(self, x, train=False, rng=None):
        if x.shape[1] != self.w.value.shape[0]:
            raise ShapeError(f"input width {x.shape[1]} != {self.w.value.shape[0]}")
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, grad):
        self.w.grad = self._x.T @ grad
        self.b.grad = grad.sum(axis=0)
        return grad @ self.w.value.T

    def params(self):
        return [self.w, self.b]


class Dropout:
    """Inverted dropout: training scales survivors by 1/(1-rate), eval is identity."""

    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._mask = None

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        keep = rng.random(x.shape) >= self.rate
        self._mask = keep.astype(x.dtype) / x.dtype.type(1.0 - self.rate)
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask

    def params(self):
        return []


class Softmax:
    def __init__(self):
        self._probs = None

    def forward(self, x, train=False, rng=None):
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        self._probs = e / e.sum(axis=1, keepdims=True)
        return self._probs

    def backward(self, grad):
        p = self._probs
        inner = (grad * p).sum(axis=1, keepdims=True)
        return p * (grad - inner)

    def params(self):
        return []
