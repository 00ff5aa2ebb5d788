"""Minimal differentiable-layer engine with projected momentum SGD."""

from .engine import Gradients, GradTape, backward, forward
from .layers import (CONSTRAINTS, NONNEG, UNCONSTRAINED, Conv1D, Dense,
                     Embedding, GatedConv1D, GlobalMaxPool1D, Layer, ReLU,
                     ShapeError, Sigmoid, Softmax, glorot_span, sigmoid,
                     softmax)
from .losses import CLAMP_EPS, binary_cross_entropy, softmax_cross_entropy
from .optim import SgdConfig, init_velocity, minibatches, sgd_step
from .serialize import (FORMAT_VERSION, dumps_doc, net_from_doc, net_to_doc)

__all__ = [
    "CONSTRAINTS", "NONNEG", "UNCONSTRAINED", "CLAMP_EPS", "FORMAT_VERSION",
    "Conv1D", "Dense", "Embedding", "GatedConv1D", "GlobalMaxPool1D",
    "Gradients", "GradTape", "Layer", "ReLU", "ShapeError", "SgdConfig",
    "Sigmoid", "Softmax", "backward", "binary_cross_entropy", "dumps_doc",
    "forward", "glorot_span", "init_velocity", "minibatches", "net_from_doc",
    "net_to_doc", "sgd_step", "sigmoid", "softmax", "softmax_cross_entropy",
]
