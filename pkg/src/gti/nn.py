"""A small float64 layer library with hand-written gradients.

Just enough to build DCGAN-style generators and discriminators over k x k
adjacency "images": fully connected, 4x4 stride-2 convolution and transposed
convolution, batch normalization, leaky ReLU, sigmoid, tanh, binary
cross-entropy, and Adam/SGD.

Each layer caches what its backward pass needs during ``forward``; calling
``backward`` without a matching forward raises :class:`StateError`. Parameter
gradients are left in ``layer.grads`` keyed like ``layer.params``.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

KERNEL = 4
STRIDE = 2
PAD = 1


class ShapeError(ValueError):
    pass


class StateError(RuntimeError):
    pass


class NumericError(FloatingPointError):
    pass


def _check_finite(x, where):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values produced by {where}")


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self._cache = None

    def _take_cache(self, grad_out):
        if self._cache is None:
            raise StateError(f"{type(self).__name__}.backward called without a cached forward pass")
        cache = self._cache
        self._cache = None
        shape = cache[0]
        if grad_out.shape != shape:
            raise StateError(f"{type(self).__name__}: grad shape {grad_out.shape} does not match "
                             f"forward output {shape}")
        return cache[1:]

    def forward(self, x, training=True):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def __repr__(self):
        shapes = ", ".join(f"{k}={v.shape}" for k, v in self.params.items())
        return f"{type(self).__name__}({shapes})"


class Linear(Layer):
    def __init__(self, n_in, n_out, rng=None, std=0.02):
        super().__init__()
        rng = np.random.default_rng(rng)
        self.params["W"] = rng.normal(0.0, std, size=(n_in, n_out))
        self.params["b"] = np.zeros(n_out)

    def forward(self, x, training=True):
        W = self.params["W"]
        if x.ndim != 2 or x.shape[1] != W.shape[0]:
            raise ShapeError(f"Linear expects (batch, {W.shape[0]}), got {x.shape}")
        out = x @ W + self.params["b"]
        self._cache = (out.shape, x)
        return out

    def backward(self, grad_out):
        (x,) = self._take_cache(grad_out)
        self.grads["W"] = x.T @ grad_out
        self.grads["b"] = grad_out.sum(axis=0)
        return grad_out @ self.params["W"].T


class Reshape(Layer):
    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x, training=True):
        if int(np.prod(x.shape[1:])) != int(np.prod(self.shape)):
            raise ShapeError(f"cannot reshape {x.shape[1:]} to {self.shape}")
        out = x.reshape((x.shape[0],) + self.shape)
        self._cache = (out.shape, x.shape)
        return out

    def backward(self, grad_out):
        (in_shape,) = self._take_cache(grad_out)
        return grad_out.reshape(in_shape)


class Flatten(Layer):
    def forward(self, x, training=True):
        out = x.reshape(x.shape[0], -1)
        self._cache = (out.shape, x.shape)
        return out

    def backward(self, grad_out):
        (in_shape,) = self._take_cache(grad_out)
        return grad_out.reshape(in_shape)


def _windows(xp, n_out_h, n_out_w):
    """Strided 4x4 patches of a padded input: (B, C, Ho, Wo, 4, 4), a view."""
    win = sliding_window_view(xp, (KERNEL, KERNEL), axis=(2, 3))
    return win[:, :, : STRIDE * n_out_h : STRIDE, : STRIDE * n_out_w : STRIDE]


def im2col(x):
    """Patch matrix of shape (B*Ho*Wo, C*16) for a stride-2, pad-1 4x4 convolution."""
    B, C, H, Wd = x.shape
    Ho, Wo = H // STRIDE, Wd // STRIDE
    xp = np.pad(x, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
    win = _windows(xp, Ho, Wo)
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(B * Ho * Wo, C * KERNEL * KERNEL)


def col2im(cols, shape):
    """Scatter-add patch rows (B*Ho*Wo, C*16) back onto an image of ``shape``."""
    B, C, H, Wd = shape
    Ho, Wo = H // STRIDE, Wd // STRIDE
    c6 = cols.reshape(B, Ho, Wo, C, KERNEL, KERNEL).transpose(4, 5, 0, 3, 1, 2).copy()
    xp = np.zeros((B, C, H + 2 * PAD, Wd + 2 * PAD))
    for i in range(KERNEL):
        for j in range(KERNEL):
            xp[:, :, i : i + STRIDE * Ho : STRIDE, j : j + STRIDE * Wo : STRIDE] += c6[i, j]
    return xp[:, :, PAD : PAD + H, PAD : PAD + Wd]


def conv_forward(x, W):
    """Cross-correlation with stride 2, zero padding 1; W has shape (Cout, Cin, 4, 4).

    Returns the output and the patch matrix (reused by the weight gradient).
    """
    B, _, H, Wd = x.shape
    cols = im2col(x)
    out = cols @ W.reshape(W.shape[0], -1).T
    return out.reshape(B, H // STRIDE, Wd // STRIDE, -1).transpose(0, 3, 1, 2), cols


def conv_adjoint(g, W, in_hw):
    """Adjoint of :func:`conv_forward` in its input; g has shape (B, Cout, Ho, Wo)."""
    B, cout = g.shape[:2]
    cols = g.transpose(0, 2, 3, 1).reshape(-1, cout) @ W.reshape(cout, -1)
    return col2im(cols, (B, W.shape[1]) + tuple(in_hw))


def _flat_channels_last(g):
    return g.transpose(0, 2, 3, 1).reshape(-1, g.shape[1])


class Conv2d(Layer):
    """4x4 kernel, stride 2, padding 1: halves the spatial dimensions."""

    def __init__(self, c_in, c_out, rng=None, std=0.02):
        super().__init__()
        rng = np.random.default_rng(rng)
        self.params["W"] = rng.normal(0.0, std, size=(c_out, c_in, KERNEL, KERNEL))
        self.params["b"] = np.zeros(c_out)

    def forward(self, x, training=True):
        W = self.params["W"]
        if x.ndim != 4 or x.shape[1] != W.shape[1] or x.shape[2] % 2 or x.shape[3] % 2:
            raise ShapeError(f"Conv2d expects (batch, {W.shape[1]}, even, even), got {x.shape}")
        out, cols = conv_forward(x, W)
        out = out + self.params["b"][None, :, None, None]
        self._cache = (out.shape, x.shape, cols)
        return out

    def backward(self, grad_out):
        in_shape, cols = self._take_cache(grad_out)
        W = self.params["W"]
        self.grads["W"] = (_flat_channels_last(grad_out).T @ cols).reshape(W.shape)
        self.grads["b"] = grad_out.sum(axis=(0, 2, 3))
        return conv_adjoint(grad_out, W, in_shape[2:])


class ConvTranspose2d(Layer):
    """Transposed 4x4 stride-2 convolution: doubles the spatial dimensions.

    W has shape (Cin, Cout, 4, 4); the forward map is exactly the input adjoint
    of :class:`Conv2d` with the same weight array.
    """

    def __init__(self, c_in, c_out, rng=None, std=0.02):
        super().__init__()
        rng = np.random.default_rng(rng)
        self.params["W"] = rng.normal(0.0, std, size=(c_in, c_out, KERNEL, KERNEL))
        self.params["b"] = np.zeros(c_out)

    def forward(self, x, training=True):
        W = self.params["W"]
        if x.ndim != 4 or x.shape[1] != W.shape[0]:
            raise ShapeError(f"ConvTranspose2d expects (batch, {W.shape[0]}, h, w), got {x.shape}")
        H, Wd = x.shape[2] * STRIDE, x.shape[3] * STRIDE
        out = conv_adjoint(x, W, (H, Wd)) + self.params["b"][None, :, None, None]
        self._cache = (out.shape, x)
        return out

    def backward(self, grad_out):
        (x,) = self._take_cache(grad_out)
        W = self.params["W"]
        gx, cols = conv_forward(grad_out, W)
        # cols: patches of the upstream gradient, one row per input pixel
        self.grads["W"] = (_flat_channels_last(x).T @ cols).reshape(W.shape)
        self.grads["b"] = grad_out.sum(axis=(0, 2, 3))
        return gx


class BatchNorm(Layer):
    """Per-channel normalization for (B, C) or (B, C, H, W) inputs."""

    def __init__(self, channels, eps=1e-6, momentum=0.1):
        super().__init__()
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)
        self.eps = eps
        self.momentum = momentum

    def _axes_shape(self, x):
        if x.ndim == 2:
            return (0,), (1, -1)
        if x.ndim == 4:
            return (0, 2, 3), (1, -1, 1, 1)
        raise ShapeError(f"BatchNorm expects 2-D or 4-D input, got {x.shape}")

    def forward(self, x, training=True):
        axes, bshape = self._axes_shape(x)
        if x.shape[1] != self.params["gamma"].size:
            raise ShapeError(f"BatchNorm over {self.params['gamma'].size} channels got {x.shape}")
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            mom = self.momentum
            self.buffers["running_mean"] = (1 - mom) * self.buffers["running_mean"] + mom * mean
            self.buffers["running_var"] = (1 - mom) * self.buffers["running_var"] + mom * var
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean.reshape(bshape)) * inv_std.reshape(bshape)
        out = xhat * self.params["gamma"].reshape(bshape) + self.params["beta"].reshape(bshape)
        self._cache = (out.shape, xhat, inv_std, axes, bshape, training)
        return out

    def backward(self, grad_out):
        xhat, inv_std, axes, bshape, training = self._take_cache(grad_out)
        self.grads["gamma"] = (grad_out * xhat).sum(axis=axes)
        self.grads["beta"] = grad_out.sum(axis=axes)
        gxhat = grad_out * self.params["gamma"].reshape(bshape)
        if not training:
            return gxhat * inv_std.reshape(bshape)
        mean_g = gxhat.mean(axis=axes, keepdims=True)
        mean_gx = (gxhat * xhat).mean(axis=axes, keepdims=True)
        return (gxhat - mean_g - xhat * mean_gx) * inv_std.reshape(bshape)


class LeakyReLU(Layer):
    def __init__(self, slope=0.2):
        super().__init__()
        self.slope = slope

    def forward(self, x, training=True):
        out = np.maximum(x, self.slope * x)
        self._cache = (out.shape, x > 0)
        return out

    def backward(self, grad_out):
        (pos,) = self._take_cache(grad_out)
        return np.where(pos, grad_out, self.slope * grad_out)


def sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Sigmoid(Layer):
    def forward(self, x, training=True):
        out = sigmoid(x)
        self._cache = (out.shape, out)
        return out

    def backward(self, grad_out):
        (out,) = self._take_cache(grad_out)
        return grad_out * out * (1.0 - out)


class Tanh(Layer):
    def forward(self, x, training=True):
        out = np.tanh(x)
        self._cache = (out.shape, out)
        return out

    def backward(self, grad_out):
        (out,) = self._take_cache(grad_out)
        return grad_out * (1.0 - out * out)


class Sequential:
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, training=True):
        for layer in self.layers:
            x = layer.forward(x, training)
            _check_finite(x, type(layer).__name__)
        return x

    __call__ = forward

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def named_params(self):
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params.items():
                yield f"{i}.{type(layer).__name__}.{name}", arr

    def named_buffers(self):
        for i, layer in enumerate(self.layers):
            for name, arr in layer.buffers.items():
                yield f"{i}.{type(layer).__name__}.{name}", arr

    def parameters(self):
        """(layer, name) pairs of every trainable array, in a fixed order."""
        return [(layer, name) for layer in self.layers for name in layer.params]

    def state_dict(self) -> dict:
        state = {k: v.copy() for k, v in self.named_params()}
        state.update({k: v.copy() for k, v in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict) -> None:
        for i, layer in enumerate(self.layers):
            prefix = f"{i}.{type(layer).__name__}."
            for store in (layer.params, layer.buffers):
                for name in store:
                    arr = np.asarray(state[prefix + name], dtype=np.float64)
                    if arr.shape != store[name].shape:
                        raise ShapeError(f"{prefix + name}: expected {store[name].shape}, got {arr.shape}")
                    store[name] = arr.copy()


def bce_with_logits(logits, targets):
    """Mean binary cross-entropy of ``sigmoid(logits)`` against ``targets``.

    Returns ``(loss, d loss / d logits)``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.broadcast_to(np.asarray(targets, dtype=np.float64), logits.shape)
    loss = np.maximum(logits, 0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    grad = (sigmoid(logits) - targets) / logits.size
    return float(loss.mean()), grad


def bce(probs, targets, eps=1e-12):
    """Mean binary cross-entropy on probabilities; returns ``(loss, d loss / d probs)``."""
    p = np.clip(np.asarray(probs, dtype=np.float64), eps, 1 - eps)
    t = np.broadcast_to(np.asarray(targets, dtype=np.float64), p.shape)
    loss = -(t * np.log(p) + (1 - t) * np.log1p(-p))
    grad = (p - t) / (p * (1 - p)) / p.size
    return float(loss.mean()), grad


class AdamState:
    """Moment accumulators for one list of parameter arrays."""

    def __init__(self, shapes, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.step = 0
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps


def adam_step(state: AdamState, params: list, grads: list) -> None:
    """In-place bias-corrected Adam update of ``params``."""
    if len(params) != len(state.m):
        raise ShapeError("parameter list does not match optimizer state")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient passed to adam_step")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    lr_t = state.lr * np.sqrt(1 - b2**t) / (1 - b1**t)
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"Adam shape mismatch: param {p.shape}, grad {g.shape}")
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= lr_t * m / (np.sqrt(v) + state.eps * np.sqrt(1 - b2**t))


class Adam:
    """Adam bound to the trainable arrays of a :class:`Sequential`."""

    def __init__(self, net: Sequential, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.net = net
        self.refs = net.parameters()
        self.state = AdamState([layer.params[name].shape for layer, name in self.refs],
                               lr, beta1, beta2, eps)

    def step(self):
        params = [layer.params[name] for layer, name in self.refs]
        grads = [layer.grads[name] for layer, name in self.refs]
        adam_step(self.state, params, grads)


class SGD:
    def __init__(self, net: Sequential, lr=0.01):
        self.refs = net.parameters()
        self.lr = lr

    def step(self):
        for layer, name in self.refs:
            g = layer.grads[name]
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient passed to SGD")
            layer.params[name] -= self.lr * g


# Checkpoint layout (little-endian):
#   b"GTI-CKPT\n"                      magic
#   uint32 header length, header bytes  UTF-8 JSON: {"version": 1, "meta": {...},
#                                       "arrays": [{"name", "shape"}, ...]}
#   float64 payload                     arrays concatenated in header order, C order
CKPT_MAGIC = b"GTI-CKPT\n"
CKPT_VERSION = 1


def save_checkpoint(path, arrays: dict, meta: dict | None = None) -> None:
    names = sorted(arrays)
    header = {
        "version": CKPT_VERSION,
        "meta": meta or {},
        "arrays": [{"name": n, "shape": list(np.shape(arrays[n]))} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(os.fspath(path), "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict, dict]:
    with open(os.fspath(path), "rb") as fh:
        if fh.read(len(CKPT_MAGIC)) != CKPT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (size,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(size).decode("utf-8"))
        if header.get("version") != CKPT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8")
            if data.size != count:
                raise ValueError(f"{path}: truncated payload for {entry['name']}")
            arrays[entry["name"]] = data.reshape(shape).astype(np.float64)
    return arrays, header["meta"]
