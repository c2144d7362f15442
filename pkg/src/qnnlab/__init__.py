"""Constructive quantized networks, layer-wise regularisation and bound checks."""

from qnnlab.core import (
    HEAVISIDE_MINUS,
    HEAVISIDE_PLUS,
    IDENTITY,
    LOGISTIC,
    RELU,
    TANH,
    Activation,
    AffineLayer,
    Layer,
    Network,
    QuantizationSet,
    affine_apply,
    check_quantized,
    eval_activation,
    eval_stair,
    forward_trace,
    load_network,
    network_forward,
    save_network,
)
from qnnlab.errors import HypothesisViolation, ResourceCapError

__version__ = "0.1.0"

__all__ = [
    "HEAVISIDE_MINUS",
    "HEAVISIDE_PLUS",
    "IDENTITY",
    "LOGISTIC",
    "RELU",
    "TANH",
    "Activation",
    "AffineLayer",
    "HypothesisViolation",
    "Layer",
    "Network",
    "QuantizationSet",
    "ResourceCapError",
    "affine_apply",
    "check_quantized",
    "eval_activation",
    "eval_stair",
    "forward_trace",
    "load_network",
    "network_forward",
    "save_network",
]
