"""Minimal deterministic tensor library for the forecasting models."""
from .functional import batchnorm, conv, conv2d, conv3d, flatten, huber_loss, leaky_relu, linear
from .init import he_uniform_init, make_rng
from .layers import LayerSpec, build_layer
from .optim import AdamState, adam_step
from .tensor import Tensor

__all__ = [
    "Tensor", "LayerSpec", "build_layer", "AdamState", "adam_step", "he_uniform_init", "make_rng",
    "conv", "conv2d", "conv3d", "batchnorm", "leaky_relu", "linear", "flatten", "huber_loss",
]
