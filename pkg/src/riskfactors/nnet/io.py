"""JSON persistence for trained networks.

The documents are self-describing: a format version field, layer specs, and
row-major weight arrays. Floats survive the round trip exactly (JSON numbers
are emitted with full precision).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import InputError
from .clustered import ClusteredAe
from .network import Activation, AeNetwork, DenseLayer, LayerSpec

AE_FORMAT = "riskfactors-ae/1"
CLUSTERED_FORMAT = "riskfactors-clustered-ae/1"


def _layer_doc(layer: DenseLayer) -> dict:
    return {
        "in_size": layer.spec.in_size,
        "out_size": layer.spec.out_size,
        "activation": layer.spec.activation.value,
        "has_bias": layer.spec.bias,
        "weights": [[float(v) for v in row] for row in layer.weights],
        "bias": None if layer.bias is None else [float(v) for v in layer.bias],
    }


def _layer_from_doc(doc: dict) -> DenseLayer:
    spec = LayerSpec(doc["in_size"], doc["out_size"],
                     Activation(doc["activation"]), doc["has_bias"])
    weights = np.asarray(doc["weights"], dtype=np.float64)
    bias = None if doc["bias"] is None else np.asarray(doc["bias"], dtype=np.float64)
    return DenseLayer(spec, weights, bias)


def ae_to_doc(network: AeNetwork, **extra) -> dict:
    return {"format": AE_FORMAT,
            "encoder": [_layer_doc(l) for l in network.encoder],
            "decoder": [_layer_doc(l) for l in network.decoder],
            **extra}


def ae_from_doc(doc: dict) -> AeNetwork:
    if doc.get("format") != AE_FORMAT:
        raise InputError(f"unexpected model format {doc.get('format')!r}")
    return AeNetwork([_layer_from_doc(l) for l in doc["encoder"]],
                     [_layer_from_doc(l) for l in doc["decoder"]])


def clustered_to_doc(cae: ClusteredAe, **extra) -> dict:
    return {
        "format": CLUSTERED_FORMAT,
        "labels": list(cae.labels),
        "clusters": [
            {"name": name,
             "columns": list(cols),
             "encoder": [_layer_doc(l) for l in enc]}
            for name, cols, enc in zip(cae.cluster_names, cae.cluster_columns,
                                       cae.encoders)
        ],
        "decoder": [_layer_doc(l) for l in cae.decoder],
        **extra,
    }


def clustered_from_doc(doc: dict) -> ClusteredAe:
    if doc.get("format") != CLUSTERED_FORMAT:
        raise InputError(f"unexpected model format {doc.get('format')!r}")
    clusters = doc["clusters"]
    return ClusteredAe(
        tuple(doc["labels"]),
        tuple(c["name"] for c in clusters),
        tuple(tuple(c["columns"]) for c in clusters),
        tuple(tuple(_layer_from_doc(l) for l in c["encoder"]) for c in clusters),
        tuple(_layer_from_doc(l) for l in doc["decoder"]),
    )


def save_model(model, path, **extra) -> None:
    doc = clustered_to_doc(model, **extra) if isinstance(model, ClusteredAe) \
        else ae_to_doc(model, **extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    fmt = doc.get("format")
    if fmt == AE_FORMAT:
        return ae_from_doc(doc)
    if fmt == CLUSTERED_FORMAT:
        return clustered_from_doc(doc)
    raise InputError(f"unknown model format {fmt!r} in {path}")
