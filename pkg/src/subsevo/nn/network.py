"""Forward and backward passes over a weighted network.

Weights are per-layer dicts of float64 arrays ("weight", "bias"; empty for
pooling and LogSoftMax). Gradients mirror the weight structure and are the
exact partial derivatives of the mean negative log-likelihood.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from .spec import (Convolution, FullyConnected, LogSoftMax, MaxPool,
                   NetworkSpec)


class ShapeError(ValueError):
    """Input rejected because its shape does not fit a layer."""


def weight_shapes(spec: NetworkSpec) -> list[dict[str, tuple[int, ...]]]:
    shapes = []
    for layer in spec.layers:
        if isinstance(layer, Convolution):
            shapes.append({
                "weight": (layer.out_channels, layer.in_channels,
                           layer.kernel_h, layer.kernel_w),
                "bias": (layer.out_channels,),
            })
        elif isinstance(layer, FullyConnected):
            shapes.append({
                "weight": (layer.out_features, layer.in_features),
                "bias": (layer.out_features,),
            })
        else:
            shapes.append({})
    return shapes


class TrainedModel:
    """A NetworkSpec bound to concrete weight tensors."""

    def __init__(self, spec: NetworkSpec, weights: list[dict[str, np.ndarray]]):
        expected = weight_shapes(spec)
        if len(weights) != len(expected):
            raise ShapeError(f"expected {len(expected)} weight entries, "
                             f"got {len(weights)}")
        for idx, (have, want) in enumerate(zip(weights, expected)):
            if set(have) != set(want):
                raise ShapeError(f"layer {idx}: weight keys {sorted(have)} "
                                 f"do not match {sorted(want)}")
            for key, shape in want.items():
                if have[key].shape != shape:
                    raise ShapeError(f"layer {idx}: {key} shape "
                                     f"{have[key].shape} != {shape}")
        self.spec = spec
        self.weights = weights

    def copy(self) -> "TrainedModel":
        return TrainedModel(self.spec, [{k: v.copy() for k, v in layer.items()}
                                        for layer in self.weights])


def _layer_name(spec, idx):
    return f"layer {idx} ({type(spec.layers[idx]).__name__})"


def _check_batch(spec, batch):
    if batch.ndim != 4 or batch.shape[1:] != spec.input_shape:
        raise ShapeError(f"layer 0 input: expected (n, {spec.input_shape[0]}, "
                         f"{spec.input_shape[1]}, {spec.input_shape[2]}), "
                         f"got {batch.shape}")


def _forward(model: TrainedModel, batch, want_cache):
    spec = model.spec
    _check_batch(spec, batch)
    x = np.ascontiguousarray(batch, dtype=np.float64)
    caches = []
    for idx, layer in enumerate(spec.layers):
        if isinstance(layer, Convolution):
            if x.ndim != 4 or x.shape[1] != layer.in_channels \
                    or x.shape[2] < layer.kernel_h or x.shape[3] < layer.kernel_w:
                raise ShapeError(f"{_layer_name(spec, idx)}: cannot convolve "
                                 f"input of shape {x.shape}")
            w = model.weights[idx]["weight"]
            b = model.weights[idx]["bias"]
            z = _kernels.conv2d_forward(x, w, b, 1, 1)
            mask = None
            if layer.activation == "relu":
                mask = z > 0
                y = np.where(mask, z, 0.0)
            else:
                y = z
            if want_cache:
                caches.append((x, mask))
            x = y
        elif isinstance(layer, MaxPool):
            if x.ndim != 4 or x.shape[2] < layer.window_h \
                    or x.shape[3] < layer.window_w:
                raise ShapeError(f"{_layer_name(spec, idx)}: window "
                                 f"{layer.window_h}x{layer.window_w} does not "
                                 f"fit input of shape {x.shape}")
            y, argmax = _kernels.maxpool_forward(
                x, layer.window_h, layer.window_w,
                layer.stride_h, layer.stride_w)
            if want_cache:
                caches.append((x.shape, argmax))
            x = y
        elif isinstance(layer, FullyConnected):
            flat = x.reshape(x.shape[0], -1)
            if flat.shape[1] != layer.in_features:
                raise ShapeError(f"{_layer_name(spec, idx)}: expected "
                                 f"{layer.in_features} features, got "
                                 f"{flat.shape[1]} (input shape {x.shape})")
            w = model.weights[idx]["weight"]
            b = model.weights[idx]["bias"]
            z = flat @ w.T + b
            mask = None
            if layer.activation == "relu":
                mask = z > 0
                y = np.where(mask, z, 0.0)
            else:
                y = z
            if want_cache:
                caches.append((flat, x.shape, mask))
            x = y
        elif isinstance(layer, LogSoftMax):
            if x.ndim != 2:
                raise ShapeError(f"{_layer_name(spec, idx)}: expected a "
                                 f"(n, classes) input, got shape {x.shape}")
            shifted = x - x.max(axis=1, keepdims=True)
            logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
            if want_cache:
                caches.append(logp)
            x = logp
    return x, caches


def forward(model: TrainedModel, batch) -> np.ndarray:
    """Log-probabilities of shape (n, num_classes)."""
    out, _ = _forward(model, batch, want_cache=False)
    return out


def nll_loss(log_probs, targets) -> float:
    """Mean negative log-likelihood of the target classes."""
    targets = np.asarray(targets)
    n, k = log_probs.shape
    if targets.shape != (n,):
        raise ValueError(f"expected {n} targets, got shape {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= k):
        raise ValueError(f"target out of range [0, {k})")
    return float(-log_probs[np.arange(n), targets].mean())


def _backward_from(model, caches, grad):
    spec = model.spec
    grads = [dict() for _ in spec.layers]
    for idx in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[idx]
        if isinstance(layer, Convolution):
            x, mask = caches[idx]
            if mask is not None:
                grad = np.where(mask, grad, 0.0)
            grad = np.ascontiguousarray(grad)
            gx, gw, gb = _kernels.conv2d_backward(
                x, model.weights[idx]["weight"], 1, 1, grad)
            grads[idx] = {"weight": gw, "bias": gb}
            grad = gx
        elif isinstance(layer, MaxPool):
            shape, argmax = caches[idx]
            grad = _kernels.maxpool_backward(np.ascontiguousarray(grad),
                                             argmax, shape[2], shape[3])
        elif isinstance(layer, FullyConnected):
            flat, orig_shape, mask = caches[idx]
            if mask is not None:
                grad = np.where(mask, grad, 0.0)
            w = model.weights[idx]["weight"]
            grads[idx] = {"weight": grad.T @ flat, "bias": grad.sum(axis=0)}
            grad = (grad @ w).reshape(orig_shape)
        elif isinstance(layer, LogSoftMax):
            logp = caches[idx]
            grad = grad - np.exp(logp) * grad.sum(axis=1, keepdims=True)
    return grads


def loss_and_gradients(model: TrainedModel, batch, targets):
    """(mean NLL, per-layer weight/bias gradients) in one pass."""
    logp, caches = _forward(model, batch, want_cache=True)
    targets = np.asarray(targets)
    loss = nll_loss(logp, targets)
    n = logp.shape[0]
    grad = np.zeros_like(logp)
    grad[np.arange(n), targets] = -1.0 / n
    return loss, _backward_from(model, caches, grad)


def backward(model: TrainedModel, batch, targets):
    """Per-layer gradients of nll_loss(forward(model, batch), targets)."""
    _, grads = loss_and_gradients(model, batch, targets)
    return grads
