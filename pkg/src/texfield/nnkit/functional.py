"""Differentiable building blocks composed from Tensor primitives."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor, concat

__all__ = [
    "linear",
    "softmax",
    "layernorm",
    "attention",
    "mlp",
    "trilinear",
    "relu",
    "sigmoid",
]


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """y = x @ w (+ b). Works on [..., din] against w[din, dout]."""
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"linear: x[..., {x.shape[-1]}] incompatible with w{w.shape}")
    y = x @ w
    if b is not None:
        if b.shape != (w.shape[1],):
            raise ValueError(f"linear: bias shape {b.shape} != ({w.shape[1]},)")
        y = y + b
    return y


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    # Row-max subtraction is a constant shift: softmax is invariant to it, so
    # treating the max as detached keeps gradients exact.
    shift = Tensor(np.max(x.data, axis=axis, keepdims=True))
    e = (x - shift).exp()
    return e / e.sum(axis=axis, keepdims=True)


def layernorm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    y = xc / (var + eps).sqrt()
    return y * gamma + beta


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """Scaled dot-product attention softmax(q k^T / sqrt(d)) v.

    Accepts [m, d] x [n, d] x [n, dv] or batched [..., m, d] variants.
    Rows of the output are convex combinations of rows of v.
    """
    d = q.shape[-1]
    if k.shape[-1] != d:
        raise ValueError(f"attention: q dim {d} != k dim {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError(f"attention: k rows {k.shape[-2]} != v rows {v.shape[-2]}")
    kt = k.transpose(tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2))
    scores = (q @ kt) * (1.0 / math.sqrt(d))
    return softmax(scores, axis=-1) @ v


def relu(x: Tensor) -> Tensor:
    return x.relu()


def sigmoid(x: Tensor) -> Tensor:
    return x.sigmoid()


def mlp(x: Tensor, layers, activation=relu) -> Tensor:
    """Apply (w, b) pairs with `activation` between them (none after the last)."""
    h = x
    for i, (w, b) in enumerate(layers):
        h = linear(h, w, b)
        if i + 1 < len(layers):
            h = activation(h)
    return h


def trilinear(grid: Tensor, u: Tensor) -> Tensor:
    """Blend 8 corner features by local coordinates.

    grid: [n, 2, 2, 2, c] corner features, u: [n, 3] in [0, 1]^3.
    Reproduces any trilinear polynomial exactly; gradients flow to both
    grid and coords.
    """
    if np.any(u.data < -1e-9) or np.any(u.data > 1.0 + 1e-9):
        raise ValueError("trilinear: coords outside [0, 1]^3")
    ux, uy, uz = u[:, 0:1], u[:, 1:2], u[:, 2:3]
    wx = (1.0 - ux, ux)
    wy = (1.0 - uy, uy)
    wz = (1.0 - uz, uz)
    parts = []
    for i in (0, 1):
        for j in (0, 1):
            for k_ in (0, 1):
                corner = grid[:, i, j, k_, :]
                parts.append(corner * (wx[i] * wy[j] * wz[k_]))
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out
