"""ADAM training loop for dense stacks and autoencoders.

Loss is the mean squared reconstruction error over all batch entries plus an
L2 penalty on the weights. The split between training and validation data is
chronological (the panel rows are ordered in time), early stopping monitors
the validation MSE, and every random choice is driven by an explicit
generator so identical seeds reproduce identical epoch logs bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .._util import substream
from ..errors import DivergenceError, InsufficientDataError, PanelError
from . import kernels
from .network import AeNetwork, LayerSpec, Stack, initialize_ae, \
    stack_backward, stack_forward


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and protocol settings.

    ``validation_fraction=None`` trains on the whole data set (used for the
    final fit); ``patience=None`` disables early stopping.
    """

    max_epochs: int = 500
    batch_size: int = 64
    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    l2: float = 0.0
    validation_fraction: float | None = 0.2
    patience: int | None = 25
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise PanelError("batch_size must be >= 1")
        if self.validation_fraction is not None and not 0 < self.validation_fraction < 1:
            raise PanelError("validation_fraction must lie in (0, 1)")
        if self.max_epochs < 1:
            raise PanelError("max_epochs must be >= 1")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float      # reconstruction MSE + L2 penalty
    train_mse: float
    val_mse: float | None


@dataclass
class FitResult:
    layers: Stack
    train_mse: float
    val_mse: float | None
    log: tuple[EpochStats, ...]


@dataclass
class TrainResult:
    network: AeNetwork
    train_mse: float
    val_mse: float | None
    log: tuple[EpochStats, ...]


def _as_matrix(data) -> np.ndarray:
    values = getattr(data, "values", data)
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise PanelError("training data must be a 2-D matrix")
    return x


def mse(layers_or_network, inputs, targets=None) -> float:
    """Mean squared reconstruction error over all entries of ``inputs``."""
    layers = getattr(layers_or_network, "layers", layers_or_network)
    x = _as_matrix(inputs)
    y = x if targets is None else _as_matrix(targets)
    out = stack_forward(layers, x)
    return float(np.mean((out - y) ** 2))


def _weight_penalty(layers: Stack, l2: float) -> float:
    if not l2:
        return 0.0
    return l2 * sum(float(np.sum(layer.weights ** 2)) for layer in layers)


def fit_stack(layers: Stack, inputs: np.ndarray, targets: np.ndarray,
              config: TrainConfig, rng: np.random.Generator | None = None) -> FitResult:
    """Train a dense stack to map ``inputs`` to ``targets``.

    The stack is copied before optimisation; the input layers are left
    untouched. Weights snapshot at the best monitored epoch are restored at
    the end, so an early-stopped run returns its best model rather than the
    last one.
    """
    X = _as_matrix(inputs)
    Y = _as_matrix(targets)
    if X.shape[0] != Y.shape[0]:
        raise PanelError("inputs and targets disagree on row count")
    n = X.shape[0]
    if n < 2 * config.batch_size:
        raise InsufficientDataError(
            f"{n} rows but batch size {config.batch_size} needs at least "
            f"{2 * config.batch_size}")
    if rng is None:
        rng = substream(config.seed, "batches")

    if config.validation_fraction is None:
        n_train = n
    else:
        n_val = int(round(n * config.validation_fraction))
        n_train = n - max(1, min(n_val, n - 1))
    Xt, Yt = X[:n_train], Y[:n_train]
    Xv, Yv = X[n_train:], Y[n_train:]
    has_val = n_train < n

    layers = [layer.copy() for layer in layers]
    m_state = [(np.zeros_like(l.weights),
                None if l.bias is None else np.zeros_like(l.bias)) for l in layers]
    v_state = [(np.zeros_like(l.weights),
                None if l.bias is None else np.zeros_like(l.bias)) for l in layers]

    log: list[EpochStats] = []
    best = (np.inf, None, -1)  # monitored value, weight snapshot, epoch
    stale = 0
    t = 0
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            sel = perm[start:start + config.batch_size]
            xb, yb = Xt[sel], Yt[sel]
            out, cache = stack_forward(layers, xb, want_cache=True)
            diff = out - yb
            if not np.all(np.isfinite(diff)):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch} (step {t + 1}); "
                    "reduce the step size")
            grad = (2.0 / diff.size) * diff
            grads = stack_backward(layers, cache, grad, config.l2)
            t += 1
            for layer, (mw, mb), (vw, vb), (dw, db) in zip(layers, m_state, v_state, grads):
                kernels.adam_step(layer.weights, dw, mw, vw, config.step_size,
                                  config.beta1, config.beta2, config.epsilon, t)
                if db is not None:
                    kernels.adam_step(layer.bias, db, mb, vb, config.step_size,
                                      config.beta1, config.beta2, config.epsilon, t)

        train_mse = mse(layers, Xt, Yt)
        val_mse = mse(layers, Xv, Yv) if has_val else None
        train_loss = train_mse + _weight_penalty(layers, config.l2)
        if not np.isfinite(train_loss):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        log.append(EpochStats(epoch, train_loss, train_mse, val_mse))

        monitored = val_mse if has_val else train_loss
        if monitored < best[0]:
            best = (monitored, [(l.weights.copy(),
                                 None if l.bias is None else l.bias.copy())
                                for l in layers], epoch)
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                break

    if best[1] is not None:
        for layer, (w, b) in zip(layers, best[1]):
            layer.weights[...] = w
            if b is not None:
                layer.bias[...] = b
    return FitResult(layers, mse(layers, Xt, Yt),
                     mse(layers, Xv, Yv) if has_val else None, tuple(log))


def train(network: AeNetwork, data, config: TrainConfig,
          rng: np.random.Generator | None = None) -> TrainResult:
    """Train an autoencoder to reconstruct ``data`` (panel or matrix).

    The input network provides the architecture and initial weights; it is
    not modified. Report the full-data MSE separately via
    ``mse(result.network, data)`` when needed.
    """
    X = _as_matrix(data)
    fit = fit_stack(network.layers, X, X, config, rng)
    n_enc = len(network.encoder)
    trained = AeNetwork(fit.layers[:n_enc], fit.layers[n_enc:])
    return TrainResult(trained, fit.train_mse, fit.val_mse, fit.log)


def train_ae(data, encoder_specs: Sequence[LayerSpec],
             decoder_specs: Sequence[LayerSpec], config: TrainConfig,
             *, stream: str = "ae") -> TrainResult:
    """Initialise (from the config seed) and train an autoencoder."""
    init_rng = substream(config.seed, f"{stream}:init")
    network = initialize_ae(list(encoder_specs), list(decoder_specs), init_rng)
    return train(network, data, config,
                 rng=substream(config.seed, f"{stream}:batches"))
