"""Minimal dense network engine: forward pass, backprop, ADAM with L2, the
autoencoder architectures used for factor aggregation, and the clustered
variant with per-category encoders feeding one joint decoder."""

from .clustered import (
    ClusteredAe,
    ClusteredAeResult,
    ClusteredAeSpec,
    clustered_mse,
    decode_clustered,
    encode_clustered,
    fit_clustered_ae,
    reconstruct_clustered,
)
from .io import load_model, save_model
from .kernels import BACKEND
from .network import (
    Activation,
    AeNetwork,
    DenseLayer,
    LayerSpec,
    activation_derivative,
    activation_value,
    ae_specs,
    encode,
    forward,
    initialize_ae,
    stack_backward,
    stack_forward,
)
from .train import EpochStats, FitResult, TrainConfig, TrainResult, fit_stack, \
    mse, train, train_ae

__all__ = [
    "Activation", "AeNetwork", "BACKEND", "ClusteredAe", "ClusteredAeResult",
    "ClusteredAeSpec", "DenseLayer", "EpochStats", "FitResult", "LayerSpec",
    "TrainConfig", "TrainResult", "activation_derivative", "activation_value",
    "ae_specs", "clustered_mse", "decode_clustered", "encode", "encode_clustered",
    "fit_clustered_ae", "fit_stack", "forward", "initialize_ae", "load_model",
    "mse", "reconstruct_clustered", "save_model", "stack_backward",
    "stack_forward", "train", "train_ae",
]
