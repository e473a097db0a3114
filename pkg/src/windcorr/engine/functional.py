"""Differentiable layer primitives: convolution, batch norm, activations, loss."""
from __future__ import annotations

import itertools

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor, as_tensor


def _pads(kernel, padding):
    if padding == "valid":
        return [(0, 0)] * len(kernel)
    if padding == "same":
        return [((k - 1) // 2, k - 1 - (k - 1) // 2) for k in kernel]
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


def conv(x: Tensor, w: Tensor, b: Tensor | None = None, stride=1, padding: str = "same") -> Tensor:
    """N-d cross-correlation. x: [N][C_in][*spatial], w: [C_out][C_in][*kernel]."""
    nd = w.ndim - 2
    if x.ndim != nd + 2:
        raise ShapeError(f"conv{nd}d expects a {nd + 2}-d input, got shape {x.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv{nd}d expected {w.shape[1]} input channels, got {x.shape[1]}")
    kernel = w.shape[2:]
    stride = (stride,) * nd if isinstance(stride, int) else tuple(stride)
    pads = _pads(kernel, padding)
    xp = np.pad(x.data, [(0, 0), (0, 0)] + pads) if any(sum(p) for p in pads) else x.data
    if any(xp.shape[2 + i] < k for i, k in enumerate(kernel)):
        raise ShapeError(f"kernel {kernel} larger than padded input {xp.shape[2:]}")

    axes = tuple(range(2, 2 + nd))
    win = sliding_window_view(xp, kernel, axis=axes)  # [N][C][o...][k...]
    if any(s != 1 for s in stride):
        win = win[(slice(None), slice(None)) + tuple(slice(None, None, s) for s in stride)]
    N, C = x.shape[:2]
    out_sp = win.shape[2:2 + nd]
    K = int(np.prod(kernel))
    # [N][o...][C][k...] -> rows = output voxels, cols = receptive field
    perm = (0,) + tuple(range(2, 2 + nd)) + (1,) + tuple(range(2 + nd, 2 + 2 * nd))
    cols = win.transpose(perm).reshape(-1, C * K)
    wf = w.data.reshape(w.shape[0], -1)
    out = cols @ wf.T
    if b is not None:
        out += b.data
    out = np.moveaxis(out.reshape((N,) + out_sp + (w.shape[0],)), -1, 1)

    def back(g):
        gm = np.moveaxis(g, 1, -1).reshape(-1, w.shape[0])
        gw = (gm.T @ cols).reshape(w.shape)
        gb = gm.sum(axis=0) if b is not None else None
        gx = None
        if x.requires_grad:
            dcols = (gm @ wf).reshape((N,) + out_sp + (C,) + tuple(kernel))
            dxp = np.zeros(xp.shape)
            back_perm = (0, 1 + nd) + tuple(range(1, 1 + nd))
            for idx in itertools.product(*(range(k) for k in kernel)):
                sl = tuple(slice(i, i + s * (o - 1) + 1, s) for i, s, o in zip(idx, stride, out_sp))
                dxp[(slice(None), slice(None)) + sl] += dcols[(Ellipsis,) + idx].transpose(back_perm)
            crop = tuple(slice(lo, dxp.shape[2 + i] - hi) for i, (lo, hi) in enumerate(pads))
            gx = dxp[(slice(None), slice(None)) + crop]
        return (gx, gw, gb) if b is not None else (gx, gw)

    parents = (x, w, b) if b is not None else (x, w)
    return Tensor._make(out, parents, back)


def conv3d(x, w, b=None, stride=1, padding="same"):
    if w.ndim != 5:
        raise ShapeError(f"conv3d weights must be 5-d, got shape {w.shape}")
    return conv(x, w, b, stride, padding)


def conv2d(x, w, b=None, stride=1, padding="same"):
    if w.ndim != 4:
        raise ShapeError(f"conv2d weights must be 4-d, got shape {w.shape}")
    return conv(x, w, b, stride, padding)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x: [N][in], w: [in][out]."""
    if x.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense expected input [N][{w.shape[0]}], got {x.shape}")
    out = x @ w
    return out + b if b is not None else out


def leaky_relu(x: Tensor, alpha: float = 0.3) -> Tensor:
    """max(alpha * x, x) for 0 <= alpha <= 1."""
    pos = x.data > 0
    slope = np.where(pos, 1.0, alpha)
    return Tensor._make(x.data * slope, (x,), lambda g: (g * slope,))


def batchnorm(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray, running_var: np.ndarray,
              training: bool, momentum: float = 0.9, eps: float = 1e-5, unbiased: bool = True) -> Tensor:
    """Per-channel (axis 1) normalization; updates the running buffers in place when training.

    The running variance tracks the unbiased batch variance unless `unbiased` is False.
    """
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, -1) + (1,) * (x.ndim - 2)
    m = x.size // x.shape[1]
    if training:
        if x.shape[0] < 2:
            raise ShapeError("batch norm in training mode needs a batch of at least 2")
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= momentum
        running_mean += (1 - momentum) * mu
        running_var *= momentum
        running_var += (1 - momentum) * (var * m / (m - 1) if unbiased else var)
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu.reshape(bshape)) * inv.reshape(bshape)
    g_ = gamma.data.reshape(bshape)
    out = g_ * xhat + beta.data.reshape(bshape)

    def back(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * g_
        if training:
            dx = (inv.reshape(bshape) / m) * (
                m * dxhat
                - dxhat.sum(axis=axes).reshape(bshape)
                - xhat * (dxhat * xhat).sum(axis=axes).reshape(bshape)
            )
        else:
            dx = dxhat * inv.reshape(bshape)
        return dx, dgamma, dbeta

    return Tensor._make(out, (x, gamma, beta), back)


def mean_axis(x: Tensor, axis: int) -> Tensor:
    return x.mean(axis=axis)


def flatten(x: Tensor) -> Tensor:
    return x.reshape(x.shape[0], -1)


def huber_loss(pred: Tensor, target, delta: float = 1.0) -> Tensor:
    """Mean Huber loss; quadratic for |r| <= delta, linear beyond."""
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"huber_loss shape mismatch: pred {pred.shape} vs target {target.shape}")
    r = pred.data - target.data
    a = np.abs(r)
    per = np.where(a <= delta, 0.5 * r * r, delta * (a - 0.5 * delta))
    n = r.size

    def back(g):
        d = np.clip(r, -delta, delta) * (g / n)
        return d, -d

    return Tensor._make(np.array(per.mean()), (pred, target), back)
