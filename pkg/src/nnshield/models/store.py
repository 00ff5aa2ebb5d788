"""Model files: a model-level header plus the layer-stack JSON document."""

from __future__ import annotations

from pathlib import Path

import json

import numpy as np

from ..ioutil import canonical_dumps, write_text_atomic
from ..nn import Dense, Sigmoid, net_from_doc, net_to_doc
from .linear import LinearModel
from .multiclass import MulticlassHead
from .tinyconv import TinyConv

MODEL_FORMAT_VERSION = 1

LINEAR_KIND = "linear"
TINYCONV_KIND = "tinyconv"
MULTICLASS_KIND = "multiclass"


def _header(kind: str, **fields) -> dict:
    header = {"model_kind": kind, "feature_space_id": None, "k": None,
              "head_mode": None, "eof_row_zeroed": None}
    header.update(fields)
    return header


def model_to_doc(model) -> dict:
    if isinstance(model, LinearModel):
        dense = Dense(1, len(model.w))
        dense.w[0, :] = model.w
        dense.b[0] = model.b
        header = _header(LINEAR_KIND, feature_space_id=model.feature_space_id,
                         mode=model.mode, lasso_lambda=model.lasso_lambda)
        net = [dense, Sigmoid()]
    elif isinstance(model, TinyConv):
        header = _header(TINYCONV_KIND, eof_row_zeroed=model.eof_row_zeroed,
                         pad_len=model.pad_len, constraint=model.constraint)
        net = model.net
    elif isinstance(model, MulticlassHead):
        header = _header(MULTICLASS_KIND, k=model.k, head_mode=model.mode,
                         trunk_frozen=model.trunk_frozen)
        net = model.net
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    return {"format_version": MODEL_FORMAT_VERSION, "header": header,
            "net": net_to_doc(net)}


def model_from_doc(doc: dict):
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')!r}")
    header = doc["header"]
    kind = header["model_kind"]
    net = net_from_doc(doc["net"])
    if kind == LINEAR_KIND:
        dense = net[0]
        return LinearModel(w=dense.w[0].copy(), b=float(dense.b[0]),
                           mode=header["mode"], lasso_lambda=header["lasso_lambda"],
                           feature_space_id=header["feature_space_id"])
    if kind == TINYCONV_KIND:
        return TinyConv(net=net, pad_len=header["pad_len"],
                        constraint=header["constraint"],
                        eof_row_zeroed=header["eof_row_zeroed"])
    if kind == MULTICLASS_KIND:
        return MulticlassHead(k=header["k"], mode=header["head_mode"],
                              trunk=net[:-1], out=net[-1],
                              trunk_frozen=header["trunk_frozen"])
    raise ValueError(f"unknown model_kind {kind!r}")


def save_model(path, model) -> None:
    write_text_atomic(Path(path), canonical_dumps(model_to_doc(model)))


def load_model(path):
    return model_from_doc(json.loads(Path(path).read_text(encoding="ascii")))
