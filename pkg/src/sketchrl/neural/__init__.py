"""Minimal differentiable-computation core: tape autodiff, layers, Adam."""

from .backend import BACKEND_NAME, get_kernels, kernels
from .gradcheck import gradient_check
from .layers import (
    Conv2d,
    ConvTranspose2d,
    Dense,
    Dropout,
    Flatten,
    Layer,
    LayerSpec,
    ReLU,
    Reshape,
    Sequential,
    Sigmoid,
    Tanh,
    backward,
    build_layer,
    forward,
    mlp_specs,
    xavier_uniform,
)
from .optim import AdamState, adam_step
from .serial import load_layers, read_layer_arrays, save_layers
from .tensor import Tensor, no_grad

__all__ = [
    "BACKEND_NAME", "get_kernels", "kernels",
    "gradient_check",
    "Conv2d", "ConvTranspose2d", "Dense", "Dropout", "Flatten", "Layer", "LayerSpec",
    "ReLU", "Reshape", "Sequential", "Sigmoid", "Tanh",
    "backward", "build_layer", "forward", "mlp_specs", "xavier_uniform",
    "AdamState", "adam_step",
    "load_layers", "read_layer_arrays", "save_layers",
    "Tensor", "no_grad",
]
