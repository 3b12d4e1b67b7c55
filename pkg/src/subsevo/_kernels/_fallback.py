"""Vectorized numpy implementations of the hot kernels.

Same contracts as the compiled backend: float64 C-contiguous arrays in,
float64 arrays out. Callers validate shapes; these functions assume valid
input so the inner loops stay lean.
"""

import numpy as np


def _windows(x, kh, kw, stride_h, stride_w):
    # (n, c, oh, ow, kh, kw) strided view, no copy
    view = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return view[:, :, ::stride_h, ::stride_w]


def conv2d_forward(x, kernels, bias, stride_h, stride_w):
    c_out, _, kh, kw = kernels.shape
    win = _windows(x, kh, kw, stride_h, stride_w)
    out = np.tensordot(win, kernels, axes=([1, 4, 5], [1, 2, 3]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    out += bias[None, :, None, None]
    return out


def conv2d_backward(x, kernels, stride_h, stride_w, grad_out):
    n, c_in, h, w = x.shape
    c_out, _, kh, kw = kernels.shape
    oh, ow = grad_out.shape[2], grad_out.shape[3]

    grad_bias = grad_out.sum(axis=(0, 2, 3))

    win = _windows(x, kh, kw, stride_h, stride_w)
    grad_kernels = np.tensordot(grad_out, win, axes=([0, 2, 3], [0, 2, 3]))

    grad_x = np.zeros_like(x)
    # scatter grad_out through each kernel tap; slices never overlap per tap
    for i in range(kh):
        for j in range(kw):
            tap = np.tensordot(grad_out, kernels[:, :, i, j], axes=([1], [0]))
            grad_x[:, :, i:i + stride_h * oh:stride_h,
                   j:j + stride_w * ow:stride_w] += tap.transpose(0, 3, 1, 2)
    return grad_x, grad_kernels, grad_bias


def maxpool_forward(x, win_h, win_w, stride_h, stride_w):
    n, c, h, w = x.shape
    win = _windows(x, win_h, win_w, stride_h, stride_w)
    oh, ow = win.shape[2], win.shape[3]
    flat = win.reshape(n, c, oh, ow, win_h * win_w)
    local = flat.argmax(axis=4)
    out = np.take_along_axis(flat, local[..., None], axis=4)[..., 0]
    out = np.ascontiguousarray(out)
    # local window offset -> flat index into the (h, w) plane
    rows = local // win_w + np.arange(oh)[None, None, :, None] * stride_h
    cols = local % win_w + np.arange(ow)[None, None, None, :] * stride_w
    argmax = rows * w + cols
    return out, argmax


def maxpool_backward(grad_out, argmax, h, w):
    n, c = grad_out.shape[0], grad_out.shape[1]
    grad_x = np.zeros((n, c, h * w))
    ni = np.arange(n)[:, None, None, None]
    ci = np.arange(c)[None, :, None, None]
    np.add.at(grad_x, (ni, ci, argmax), grad_out)
    return grad_x.reshape(n, c, h, w)
