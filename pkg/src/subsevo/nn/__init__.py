"""Minimal neural-network core: specs, forward/backward, SGD training."""

from .model_io import dump_model, load_model, parse_model, save_model
from .network import (ShapeError, TrainedModel, backward, forward,
                      loss_and_gradients, nll_loss, weight_shapes)
from .ops import conv2d_forward, log_softmax, maxpool_forward, relu
from .spec import (Convolution, FullyConnected, LogSoftMax, MaxPool,
                   NetworkSpec, SpecError, lenet_spec, mlp_spec)
from .train import (SgdState, TrainConfig, evaluate_accuracy, init_weights,
                    learning_rate_at, sgd_step, train_epoch, train_network)

__all__ = [
    "Convolution", "FullyConnected", "LogSoftMax", "MaxPool", "NetworkSpec",
    "SpecError", "ShapeError", "TrainedModel", "TrainConfig", "SgdState",
    "lenet_spec", "mlp_spec", "weight_shapes", "forward", "backward",
    "loss_and_gradients", "nll_loss", "relu", "log_softmax", "conv2d_forward",
    "maxpool_forward", "init_weights", "learning_rate_at", "sgd_step",
    "train_epoch", "train_network", "evaluate_accuracy", "dump_model",
    "parse_model", "save_model", "load_model",
]
