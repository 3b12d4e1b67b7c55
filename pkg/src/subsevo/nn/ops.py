"""Standalone tensor operations with input validation.

These are the public, argument-checked entry points; the layer code in
network.py calls the kernel backend directly after its own shape checks.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from .network import ShapeError


def relu(x) -> np.ndarray:
    """Elementwise max(0, x), shape preserved."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def log_softmax(x) -> np.ndarray:
    """Row-wise log-softmax; a 1-d input is treated as a single row."""
    arr = np.asarray(x, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ShapeError(f"expected a vector or (n, k) matrix, got {arr.shape}")
    shifted = arr - arr.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return out[0] if squeeze else out


def conv2d_forward(x, kernels, bias, stride=(1, 1)) -> np.ndarray:
    """Valid (no padding) 2-d convolution of (n, c_in, h, w) with
    (c_out, c_in, kh, kw) kernels."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    kernels = np.ascontiguousarray(kernels, dtype=np.float64)
    bias = np.ascontiguousarray(bias, dtype=np.float64)
    sh, sw = stride
    if x.ndim != 4 or kernels.ndim != 4:
        raise ShapeError(f"expected 4-d input and kernels, got {x.shape} "
                         f"and {kernels.shape}")
    if kernels.shape[1] != x.shape[1]:
        raise ShapeError(f"kernel channels {kernels.shape[1]} != input "
                         f"channels {x.shape[1]}")
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(f"bias shape {bias.shape} != ({kernels.shape[0]},)")
    if kernels.shape[2] > x.shape[2] or kernels.shape[3] > x.shape[3]:
        raise ShapeError(f"kernel {kernels.shape[2]}x{kernels.shape[3]} larger "
                         f"than input {x.shape[2]}x{x.shape[3]}")
    if sh < 1 or sw < 1:
        raise ShapeError("stride must be positive")
    return _kernels.conv2d_forward(x, kernels, bias, sh, sw)


def maxpool_forward(x, window, stride):
    """Max pooling over (n, c, h, w); returns (output, argmax positions),
    argmax as flat indices into each (h, w) plane for the backward pass."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    wh, ww = window
    sh, sw = stride
    if x.ndim != 4:
        raise ShapeError(f"expected 4-d input, got {x.shape}")
    if wh > x.shape[2] or ww > x.shape[3]:
        raise ShapeError(f"window {wh}x{ww} larger than input "
                         f"{x.shape[2]}x{x.shape[3]}")
    if min(wh, ww, sh, sw) < 1:
        raise ShapeError("window and stride must be positive")
    return _kernels.maxpool_forward(x, wh, ww, sh, sw)
