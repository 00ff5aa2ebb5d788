"""Versioned JSON serialization for layer stacks.

Parameter data is base64-encoded little-endian float64, so a round trip is
bit-exact. Documents are dumped with sorted keys and fixed separators to keep
output files byte-stable.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .layers import (CONSTRAINTS, Conv1D, Dense, Embedding, GatedConv1D,
                     GlobalMaxPool1D, Layer, ReLU, Sigmoid, Softmax)

FORMAT_VERSION = 1

_PARAMLESS = {ReLU.kind: ReLU, Sigmoid.kind: Sigmoid, Softmax.kind: Softmax,
              GlobalMaxPool1D.kind: GlobalMaxPool1D}


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {"shape": list(a.shape),
            "data": base64.b64encode(a.astype("<f8", copy=False).tobytes()).decode("ascii")}


def _decode_array(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    a = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])
    return np.ascontiguousarray(a)


def layer_to_entry(layer: Layer) -> dict:
    return {
        "kind": layer.kind,
        "constraint": layer.constraint,
        "config": layer.config(),
        "params": {name: _encode_array(p)
                   for name, p in zip(layer.param_names(), layer.params())},
    }


def layer_from_entry(entry: dict) -> Layer:
    kind = entry["kind"]
    constraint = entry.get("constraint", "none")
    if constraint not in CONSTRAINTS:
        raise ValueError(f"unknown constraint {constraint!r}")
    cfg = entry.get("config", {})
    if kind in _PARAMLESS:
        layer = _PARAMLESS[kind]()
        layer.constraint = constraint
        return layer
    rng = np.random.default_rng(0)
    if kind == Dense.kind:
        layer = Dense(cfg["out_dim"], cfg["in_dim"], constraint=constraint, rng=rng)
    elif kind == Embedding.kind:
        layer = Embedding(cfg["vocab_size"], cfg["embed_dim"], constraint=constraint,
                          rng=rng, frozen_rows=tuple(cfg.get("frozen_rows", ())))
    elif kind == Conv1D.kind:
        layer = Conv1D(cfg["filters"], cfg["width"], cfg["in_dim"], cfg["stride"],
                       constraint=constraint, rng=rng)
    elif kind == GatedConv1D.kind:
        layer = GatedConv1D(cfg["filters"], cfg["width"], cfg["in_dim"], cfg["stride"],
                            constraint=constraint, rng=rng)
    else:
        raise ValueError(f"unknown layer kind {kind!r}")
    for name, p in zip(layer.param_names(), layer.params()):
        stored = _decode_array(entry["params"][name])
        if stored.shape != p.shape:
            raise ValueError(f"{kind} param {name}: stored shape {stored.shape} != expected {p.shape}")
        p[...] = stored
    return layer


def net_to_doc(net: list[Layer]) -> dict:
    return {"format_version": FORMAT_VERSION,
            "layers": [layer_to_entry(layer) for layer in net]}


def net_from_doc(doc: dict) -> list[Layer]:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {version!r}")
    return [layer_from_entry(e) for e in doc["layers"]]


def dumps_doc(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
