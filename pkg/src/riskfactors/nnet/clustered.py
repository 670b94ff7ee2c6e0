"""Clustered autoencoder: one bottleneck-one encoder per column cluster, all
codes feeding a single joint decoder that reconstructs the full panel.

Training is two-phase. Phase 1 fits an ordinary autoencoder per cluster and
keeps only its encoder (sign-normalised so each code correlates positively
with its cluster's mean column, making "-2 standard deviations" shocks
directionally meaningful). Phase 2 freezes the encoders and trains the joint
decoder to map the code series back to the panel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._util import substream
from ..cluster import ClusterAssignment
from ..errors import PanelError
from ..panel import StandardizedPanel
from .network import Activation, AeNetwork, DenseLayer, LayerSpec, Stack, \
    ae_specs, initialize_ae, stack_forward
from .train import EpochStats, TrainConfig, fit_stack, train


@dataclass(frozen=True)
class ClusteredAeSpec:
    """Layer widths/activations; defaults follow the reference architecture
    (encoder hidden 10 with Swish, joint decoder hidden 60 with Swish)."""

    encoder_hidden: int = 10
    encoder_activation: Activation = Activation.SWISH
    decoder_hidden: int = 60
    decoder_activation: Activation = Activation.SWISH


@dataclass
class ClusteredAe:
    """Per-cluster encoders plus the joint decoder."""

    labels: tuple[str, ...]
    cluster_names: tuple[str, ...]
    cluster_columns: tuple[tuple[int, ...], ...]
    encoders: tuple[tuple[DenseLayer, ...], ...]
    decoder: tuple[DenseLayer, ...]

    def __post_init__(self):
        k = len(self.cluster_names)
        if not (len(self.cluster_columns) == len(self.encoders) == k):
            raise PanelError("cluster metadata sizes disagree")
        for cols, enc in zip(self.cluster_columns, self.encoders):
            if enc[0].spec.in_size != len(cols):
                raise PanelError("encoder input size does not match cluster size")
            if enc[-1].spec.out_size != 1:
                raise PanelError("cluster encoders must have bottleneck size 1")
        if self.decoder[0].spec.in_size != k:
            raise PanelError("joint decoder input must equal the cluster count")
        if self.decoder[-1].spec.out_size != len(self.labels):
            raise PanelError("joint decoder output must equal the column count")

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_names)

    @property
    def decoder_hidden(self) -> int:
        return self.decoder[0].spec.out_size

    @property
    def decoder_activation(self) -> Activation:
        return self.decoder[0].spec.activation


@dataclass
class ClusteredAeResult:
    model: ClusteredAe
    full_mse: float
    cluster_mses: dict[str, float]
    logs: dict[str, tuple[EpochStats, ...]]


def _columns_by_cluster(panel: StandardizedPanel,
                        assignment: ClusterAssignment) -> list[tuple[int, ...]]:
    missing = [lab for lab in panel.labels if lab not in assignment.by_label]
    if missing:
        raise PanelError(f"columns without cluster: {missing}")
    cols = []
    for cid in range(1, assignment.n_clusters + 1):
        members = tuple(j for j, lab in enumerate(panel.labels)
                        if assignment.by_label[lab] == cid)
        if not members:
            raise PanelError(f"cluster {cid} is empty")
        cols.append(members)
    return cols


def _oriented(encoder: Stack, sub: np.ndarray) -> Stack:
    """Negate the final encoder layer if its code anti-correlates with the
    cluster's mean column."""
    code = stack_forward(encoder, sub)[:, 0]
    reference = sub.mean(axis=1)
    code_c = code - code.mean()
    ref_c = reference - reference.mean()
    denom = np.sqrt((code_c @ code_c) * (ref_c @ ref_c))
    if denom > 0 and float(code_c @ ref_c) / denom < 0:
        last = encoder[-1]
        flipped = DenseLayer(last.spec, -last.weights,
                             None if last.bias is None else -last.bias)
        return [*encoder[:-1], flipped]
    return list(encoder)


def fit_clustered_ae(panel: StandardizedPanel, assignment: ClusterAssignment,
                     config: TrainConfig,
                     spec: ClusteredAeSpec = ClusteredAeSpec()) -> ClusteredAeResult:
    """Two-phase fit of the clustered autoencoder on a standardised panel."""
    columns = _columns_by_cluster(panel, assignment)
    encoders: list[Stack] = []
    cluster_mses: dict[str, float] = {}
    logs: dict[str, tuple[EpochStats, ...]] = {}

    for cid, cols in enumerate(columns, start=1):
        name = assignment.names[cid - 1]
        sub = panel.values[:, cols]
        enc_specs, dec_specs = ae_specs(len(cols), spec.encoder_hidden, 1,
                                        spec.encoder_activation)
        init_rng = substream(config.seed, f"clustered:{name}:init")
        network = initialize_ae(enc_specs, dec_specs, init_rng)
        result = train(network, sub, config,
                       rng=substream(config.seed, f"clustered:{name}:batches"))
        encoders.append(_oriented(result.network.encoder, sub))
        cluster_mses[name] = result.train_mse
        logs[f"phase1:{name}"] = result.log

    k = len(columns)
    codes = np.column_stack([stack_forward(enc, panel.values[:, cols])[:, 0]
                             for enc, cols in zip(encoders, columns)])
    dec_specs = [LayerSpec(k, spec.decoder_hidden, spec.decoder_activation),
                 LayerSpec(spec.decoder_hidden, panel.d, Activation.IDENTITY)]
    dec_rng = substream(config.seed, "clustered:decoder:init")
    decoder = [DenseLayer.initialize(s, dec_rng) for s in dec_specs]
    fit = fit_stack(decoder, codes, panel.values, config,
                    rng=substream(config.seed, "clustered:decoder:batches"))
    logs["phase2:decoder"] = fit.log

    model = ClusteredAe(panel.labels, assignment.names,
                        tuple(columns), tuple(tuple(e) for e in encoders),
                        tuple(fit.layers))
    return ClusteredAeResult(model, clustered_mse(model, panel.values),
                             cluster_mses, logs)


def encode_clustered(cae: ClusteredAe, rows: np.ndarray) -> np.ndarray:
    """Code matrix (one column per cluster) for rows in panel column order."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != len(cae.labels):
        raise PanelError(f"rows have {rows.shape[1]} columns, panel has "
                         f"{len(cae.labels)}")
    return np.column_stack([stack_forward(list(enc), rows[:, cols])[:, 0]
                            for enc, cols in zip(cae.encoders, cae.cluster_columns)])


def decode_clustered(cae: ClusteredAe, codes: np.ndarray) -> np.ndarray:
    return stack_forward(list(cae.decoder), codes)


def reconstruct_clustered(cae: ClusteredAe, rows: np.ndarray) -> np.ndarray:
    return decode_clustered(cae, encode_clustered(cae, rows))


def clustered_mse(cae: ClusteredAe, rows: np.ndarray) -> float:
    rows = np.asarray(rows, dtype=np.float64)
    return float(np.mean((reconstruct_clustered(cae, rows) - rows) ** 2))
