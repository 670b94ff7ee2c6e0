"""Dense feed-forward building blocks: layer specs, parameters, forward pass
and backpropagation.

A layer computes g(x W + b) for a batch with samples in rows; the weight
matrix has shape (input size, output size). Autoencoders are an encoder and a
decoder stack whose boundary is the bottleneck.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import PanelError
from . import kernels


class Activation(enum.Enum):
    IDENTITY = "identity"
    GELU = "gelu"
    SELU = "selu"
    SWISH = "swish"

    @property
    def code(self) -> int:
        return _CODES[self]


_CODES = {
    Activation.IDENTITY: kernels.IDENTITY,
    Activation.GELU: kernels.GELU,
    Activation.SELU: kernels.SELU,
    Activation.SWISH: kernels.SWISH,
}


def activation_value(kind: Activation, x):
    """Scalar/array activation value (GELU, SELU, Swish or identity)."""
    return kernels.act_forward(kind.code, np.asarray(x, dtype=np.float64))


def activation_derivative(kind: Activation, x):
    """Analytic derivative matching :func:`activation_value`."""
    return kernels.act_grad(kind.code, np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class LayerSpec:
    in_size: int
    out_size: int
    activation: Activation = Activation.IDENTITY
    bias: bool = True

    def __post_init__(self):
        if self.in_size < 1 or self.out_size < 1:
            raise PanelError("layer sizes must be >= 1")


class DenseLayer:
    """One dense layer: spec plus its weight/bias values."""

    def __init__(self, spec: LayerSpec, weights: np.ndarray,
                 bias: np.ndarray | None):
        if weights.shape != (spec.in_size, spec.out_size):
            raise PanelError(f"weights shape {weights.shape} does not match "
                             f"spec {(spec.in_size, spec.out_size)}")
        if spec.bias and (bias is None or bias.shape != (spec.out_size,)):
            raise PanelError("bias vector missing or mis-sized")
        self.spec = spec
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.bias = None if not spec.bias else np.ascontiguousarray(bias, dtype=np.float64)

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.spec, self.weights.copy(),
                          None if self.bias is None else self.bias.copy())

    @classmethod
    def initialize(cls, spec: LayerSpec, rng: np.random.Generator) -> "DenseLayer":
        # uniform +-sqrt(6/(fan_in+fan_out)) keeps activations in range
        limit = np.sqrt(6.0 / (spec.in_size + spec.out_size))
        weights = rng.uniform(-limit, limit, size=(spec.in_size, spec.out_size))
        bias = np.zeros(spec.out_size) if spec.bias else None
        return cls(spec, weights, bias)


Stack = list[DenseLayer]


def stack_forward(layers: Stack, batch: np.ndarray,
                  want_cache: bool = False):
    """Run a batch through the stack; optionally keep the backprop cache.

    The cache holds, per layer, the layer input and the pre-activation
    values. Returns ``output`` or ``(output, cache)``.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != layers[0].spec.in_size:
        raise PanelError(f"batch has {x.shape[1]} columns, stack expects "
                         f"{layers[0].spec.in_size}")
    cache = []
    for layer in layers:
        z = x @ layer.weights
        if layer.bias is not None:
            z = z + layer.bias
        if want_cache:
            cache.append((x, z))
        if layer.spec.activation is Activation.IDENTITY:
            x = z
        else:
            x = kernels.act_forward(layer.spec.activation.code, z)
    return (x, cache) if want_cache else x


def stack_backward(layers: Stack, cache, grad_out: np.ndarray, l2: float):
    """Backpropagate a loss gradient through the stack.

    Returns per-layer ``(dW, db)`` gradients (db is None for bias-free
    layers); the L2 penalty ``l2 * sum(W^2)`` contributes ``2*l2*W`` to each
    weight gradient.
    """
    grads: list[tuple[np.ndarray, np.ndarray | None]] = [None] * len(layers)
    g = grad_out
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        x_in, z = cache[i]
        if layer.spec.activation is Activation.IDENTITY:
            gz = g
        else:
            gz = g * kernels.act_grad(layer.spec.activation.code, z)
        dw = x_in.T @ gz
        if l2:
            dw = dw + (2.0 * l2) * layer.weights
        db = gz.sum(axis=0) if layer.bias is not None else None
        grads[i] = (dw, db)
        if i:
            g = gz @ layer.weights.T
    return grads


@dataclass
class AeNetwork:
    """Autoencoder: encoder stack ending at the bottleneck plus decoder stack
    mapping the code back to the input dimension."""

    encoder: Stack
    decoder: Stack

    def __post_init__(self):
        if not self.encoder or not self.decoder:
            raise PanelError("encoder and decoder must be non-empty")
        sizes_ok = (self.encoder[-1].spec.out_size == self.decoder[0].spec.in_size
                    and self.decoder[-1].spec.out_size == self.encoder[0].spec.in_size)
        if not sizes_ok:
            raise PanelError("encoder/decoder sizes do not line up")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.spec.out_size != nxt.spec.in_size:
                raise PanelError("consecutive layer sizes do not line up")

    @property
    def layers(self) -> Stack:
        return [*self.encoder, *self.decoder]

    @property
    def input_size(self) -> int:
        return self.encoder[0].spec.in_size

    @property
    def bottleneck_size(self) -> int:
        return self.encoder[-1].spec.out_size

    def copy(self) -> "AeNetwork":
        return AeNetwork([l.copy() for l in self.encoder],
                         [l.copy() for l in self.decoder])


def initialize_ae(encoder_specs: list[LayerSpec], decoder_specs: list[LayerSpec],
                  rng: np.random.Generator) -> AeNetwork:
    return AeNetwork([DenseLayer.initialize(s, rng) for s in encoder_specs],
                     [DenseLayer.initialize(s, rng) for s in decoder_specs])


def ae_specs(input_size: int, hidden: int, bottleneck: int,
             activation: Activation, *, bias: bool = True
             ) -> tuple[list[LayerSpec], list[LayerSpec]]:
    """Single-hidden-layer AE layout: the encoder widens to ``hidden`` with
    the given activation then projects linearly to the bottleneck; the
    decoder mirrors it."""
    enc = [LayerSpec(input_size, hidden, activation, bias),
           LayerSpec(hidden, bottleneck, Activation.IDENTITY, bias)]
    dec = [LayerSpec(bottleneck, hidden, activation, bias),
           LayerSpec(hidden, input_size, Activation.IDENTITY, bias)]
    return enc, dec


def forward(network: AeNetwork, batch: np.ndarray):
    """Reconstruction of a batch plus the cached activations."""
    return stack_forward(network.layers, batch, want_cache=True)


def encode(network: AeNetwork, batch: np.ndarray) -> np.ndarray:
    return stack_forward(network.encoder, batch)
