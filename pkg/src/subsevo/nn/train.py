"""Mini-batch SGD training with a decaying learning rate.

The whole run is a pure function of (spec, data, config): weights are
initialized from config.rng_seed and the same generator drives the per-epoch
shuffles, so identical inputs give bitwise-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import TrainedModel, loss_and_gradients, forward, weight_shapes
from .spec import NetworkSpec


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    learning_rate_decay: float = 1e-5
    batch_size: int = 128
    epochs: int = 20
    l1_coeff: float = 0.0
    l2_coeff: float = 0.0
    momentum: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if min(self.learning_rate_decay, self.l1_coeff,
               self.l2_coeff, self.momentum) < 0:
            raise ValueError("decay, l1, l2 and momentum must be >= 0")


def learning_rate_at(config: TrainConfig, update_count: int) -> float:
    """lr_t = lr0 / (1 + t * decay), t = SGD updates performed so far."""
    return config.learning_rate / (1.0 + update_count * config.learning_rate_decay)


def init_weights(spec: NetworkSpec, rng: np.random.Generator):
    """Uniform +-1/sqrt(fan_in) for weights and biases, layer by layer."""
    weights = []
    for layer_shapes in weight_shapes(spec):
        if not layer_shapes:
            weights.append({})
            continue
        w_shape = layer_shapes["weight"]
        fan_in = int(np.prod(w_shape[1:]))
        bound = 1.0 / np.sqrt(fan_in)
        weights.append({
            "weight": rng.uniform(-bound, bound, size=w_shape),
            "bias": rng.uniform(-bound, bound, size=layer_shapes["bias"]),
        })
    return weights


@dataclass
class SgdState:
    """Mutable optimizer state carried across epochs."""
    update_count: int = 0
    velocity: list | None = None


def sgd_step(model: TrainedModel, gradients, config: TrainConfig,
             update_count: int, state: SgdState | None = None) -> TrainedModel:
    """One SGD update, in place. L1/L2 are added to the gradient and momentum
    accumulates the adjusted gradient; all three are inert at 0."""
    if update_count < 0:
        raise ValueError("update_count must be >= 0")
    lr = learning_rate_at(config, update_count)
    use_momentum = config.momentum > 0
    if use_momentum and state is not None and state.velocity is None:
        state.velocity = [{k: np.zeros_like(v) for k, v in layer.items()}
                          for layer in model.weights]
    for idx, layer in enumerate(model.weights):
        for key, value in layer.items():
            g = gradients[idx][key]
            if config.l2_coeff > 0:
                g = g + config.l2_coeff * value
            if config.l1_coeff > 0:
                g = g + config.l1_coeff * np.sign(value)
            if use_momentum:
                vel = state.velocity[idx][key]
                vel *= config.momentum
                vel += g
                g = vel
            value -= lr * g
    return model


def train_epoch(model: TrainedModel, data, config: TrainConfig,
                state: SgdState, rng: np.random.Generator) -> float:
    """One shuffled pass over `data`; returns the mean per-batch loss."""
    n = len(data)
    order = rng.permutation(n)
    total = 0.0
    batches = 0
    for start in range(0, n, config.batch_size):
        images, labels = data.minibatch(order[start:start + config.batch_size])
        loss, grads = loss_and_gradients(model, images, labels)
        sgd_step(model, grads, config, state.update_count, state)
        state.update_count += 1
        total += loss
        batches += 1
    return total / batches


def train_network(spec: NetworkSpec, train_data,
                  config: TrainConfig) -> TrainedModel:
    """Train a freshly initialized network for exactly config.epochs passes."""
    if len(train_data) == 0:
        raise ValueError("training set is empty")
    if int(np.max(train_data.labels)) >= spec.num_classes:
        raise ValueError("label outside the network's class range")
    rng = np.random.default_rng(config.rng_seed)
    model = TrainedModel(spec, init_weights(spec, rng))
    state = SgdState()
    for _ in range(config.epochs):
        train_epoch(model, train_data, config, state, rng)
    return model


def evaluate_accuracy(model: TrainedModel, test_data, batch_size=512) -> float:
    """Fraction of samples whose argmax log-probability matches the label
    (argmax ties resolve to the lowest class index)."""
    n = len(test_data)
    if n == 0:
        raise ValueError("test set is empty")
    hits = 0
    for start in range(0, n, batch_size):
        positions = np.arange(start, min(start + batch_size, n))
        images, labels = test_data.minibatch(positions)
        logp = forward(model, images)
        hits += int((logp.argmax(axis=1) == labels).sum())
    return hits / n
