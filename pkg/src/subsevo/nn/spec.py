"""Network architecture descriptions.

A NetworkSpec is a purely declarative stack of layer descriptors plus the
input shape; shape inference and parameter counting live here so a spec can
be validated before any weights exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class SpecError(ValueError):
    """Raised for an inconsistent architecture description."""


@dataclass(frozen=True)
class Convolution:
    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    activation: str | None = "relu"


@dataclass(frozen=True)
class MaxPool:
    window_h: int
    window_w: int
    stride_h: int
    stride_w: int


@dataclass(frozen=True)
class FullyConnected:
    in_features: int
    out_features: int
    activation: str | None = None


@dataclass(frozen=True)
class LogSoftMax:
    pass


LayerSpec = Convolution | MaxPool | FullyConnected | LogSoftMax

_ACTIVATIONS = (None, "relu")


def _check_activation(layer, index):
    if layer.activation not in _ACTIVATIONS:
        raise SpecError(f"layer {index} ({type(layer).__name__}): "
                        f"unknown activation {layer.activation!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer stack with a fixed (channels, height, width) input."""

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        if len(self.input_shape) != 3 or any(d < 1 for d in self.input_shape):
            raise SpecError(f"input shape must be 3 positive dims, "
                            f"got {self.input_shape}")
        if not self.layers:
            raise SpecError("network needs at least one layer")
        self.output_shapes()  # validates layer compatibility

    def output_shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output shapes (sample shapes, no batch axis)."""
        shapes = []
        shape = self.input_shape
        for idx, layer in enumerate(self.layers):
            shape = _infer_shape(layer, shape, idx)
            shapes.append(shape)
        return shapes

    def parameter_counts(self) -> list[int]:
        """Learnable scalars per layer: kernel volume*out+out for convolution,
        in*out+out for fully connected, 0 otherwise."""
        counts = []
        for layer in self.layers:
            if isinstance(layer, Convolution):
                counts.append(layer.in_channels * layer.kernel_h
                              * layer.kernel_w * layer.out_channels
                              + layer.out_channels)
            elif isinstance(layer, FullyConnected):
                counts.append(layer.in_features * layer.out_features
                              + layer.out_features)
            else:
                counts.append(0)
        return counts

    @property
    def num_classes(self) -> int:
        final = self.output_shapes()[-1]
        if len(final) != 1:
            raise SpecError(f"final output shape {final} is not a class vector")
        return final[0]


def _infer_shape(layer, shape, idx):
    name = f"layer {idx} ({type(layer).__name__})"
    if isinstance(layer, Convolution):
        _check_activation(layer, idx)
        if len(shape) != 3:
            raise SpecError(f"{name}: expects (c, h, w) input, got {shape}")
        c, h, w = shape
        if c != layer.in_channels:
            raise SpecError(f"{name}: expects {layer.in_channels} channels, "
                            f"got {c}")
        if layer.kernel_h > h or layer.kernel_w > w:
            raise SpecError(f"{name}: kernel {layer.kernel_h}x{layer.kernel_w} "
                            f"larger than input {h}x{w}")
        return (layer.out_channels, h - layer.kernel_h + 1,
                w - layer.kernel_w + 1)
    if isinstance(layer, MaxPool):
        if min(layer.window_h, layer.window_w,
               layer.stride_h, layer.stride_w) < 1:
            raise SpecError(f"{name}: window and stride must be positive")
        if len(shape) != 3:
            raise SpecError(f"{name}: expects (c, h, w) input, got {shape}")
        c, h, w = shape
        if layer.window_h > h or layer.window_w > w:
            raise SpecError(f"{name}: window {layer.window_h}x{layer.window_w} "
                            f"larger than input {h}x{w}")
        return (c, (h - layer.window_h) // layer.stride_h + 1,
                (w - layer.window_w) // layer.stride_w + 1)
    if isinstance(layer, FullyConnected):
        _check_activation(layer, idx)
        if math.prod(shape) != layer.in_features:
            raise SpecError(f"{name}: expects {layer.in_features} features, "
                            f"got {shape} = {math.prod(shape)}")
        return (layer.out_features,)
    if isinstance(layer, LogSoftMax):
        if len(shape) != 1:
            raise SpecError(f"{name}: expects a flat class vector, got {shape}")
        return shape
    raise SpecError(f"{name}: unknown layer type")


def lenet_spec(input_shape=(1, 28, 28), num_classes=10) -> NetworkSpec:
    """The default convolutional topology: two 5x5 ReLU convolutions with
    32/64 maps, 3x3/3 and 2x2/2 max pooling, FC 200 (ReLU), FC to classes,
    LogSoftMax. Requires 28x28 inputs."""
    c, h, w = input_shape
    if (h, w) != (28, 28):
        raise SpecError(f"lenet topology is defined for 28x28 inputs, "
                        f"got {h}x{w}")
    flat = 64 * 2 * 2
    return NetworkSpec(
        layers=(
            Convolution(c, 32, 5, 5, activation="relu"),
            MaxPool(3, 3, 3, 3),
            Convolution(32, 64, 5, 5, activation="relu"),
            MaxPool(2, 2, 2, 2),
            FullyConnected(flat, 200, activation="relu"),
            FullyConnected(200, num_classes, activation=None),
            LogSoftMax(),
        ),
        input_shape=tuple(input_shape),
    )


def mlp_spec(input_shape, hidden=(64,), num_classes=10,
             activation="relu") -> NetworkSpec:
    """Small dense network: flatten, hidden FC layers, FC to classes,
    LogSoftMax."""
    features = math.prod(input_shape)
    layers: list[LayerSpec] = []
    for width in hidden:
        layers.append(FullyConnected(features, width, activation=activation))
        features = width
    layers.append(FullyConnected(features, num_classes, activation=None))
    layers.append(LogSoftMax())
    return NetworkSpec(layers=tuple(layers), input_shape=tuple(input_shape))
