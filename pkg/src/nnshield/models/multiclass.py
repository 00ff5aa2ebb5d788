"""K-class heads over a shared feed-forward trunk.

Softmax mode is the usual coupled head. One-vs-all mode trains K independent
sigmoid heads (class i positive for head i, negative elsewhere) and reports
probabilities by normalizing the sigmoid responses to sum to one. Warm-start
copies a softmax-trained trunk, freezes it, and retrains only the final dense
layer under the non-negativity constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import (NONNEG, UNCONSTRAINED, Dense, ReLU, SgdConfig, backward,
                  forward, init_velocity, minibatches, net_from_doc,
                  net_to_doc, sgd_step, sigmoid, softmax,
                  softmax_cross_entropy)

SOFTMAX_MODE = "softmax"
OVA_MODE = "ova_sigmoid"

HEAD_MODES = (SOFTMAX_MODE, OVA_MODE)


@dataclass(frozen=True)
class Prediction:
    class_probabilities: np.ndarray
    predicted_class: int
    confidence: float


@dataclass
class MulticlassHead:
    k: int
    mode: str
    trunk: list
    out: Dense
    trunk_frozen: bool = False

    @property
    def net(self) -> list:
        return self.trunk + [self.out]


def copy_net(net: list) -> list:
    return net_from_doc(net_to_doc(net))


def _build_trunk(in_dim: int, hidden_dims, rng) -> tuple[list, int]:
    trunk = []
    prev = in_dim
    for h in hidden_dims:
        trunk += [Dense(h, prev, rng=rng), ReLU()]
        prev = h
    return trunk, prev


def trunk_activations(model: MulticlassHead, x: np.ndarray) -> np.ndarray:
    out, _ = forward(model.trunk, np.asarray(x, dtype=np.float64))
    return out


def _logits(model: MulticlassHead, x: np.ndarray):
    return forward(model.net, np.asarray(x, dtype=np.float64))


def raw_responses(model: MulticlassHead, x: np.ndarray) -> np.ndarray:
    logits, _ = _logits(model, x)
    return softmax(logits) if model.mode == SOFTMAX_MODE else sigmoid(logits)


def normalize_responses(raw: np.ndarray) -> np.ndarray:
    """Scale responses to sum to one; an all-zero row becomes uniform."""
    raw = np.asarray(raw, dtype=np.float64)
    total = raw.sum(axis=-1, keepdims=True)
    uniform = np.full_like(raw, 1.0 / raw.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = raw / total
    return np.where(total == 0.0, uniform, normalized)


def probs_multiclass(model: MulticlassHead, x: np.ndarray) -> np.ndarray:
    raw = raw_responses(model, x)
    if model.mode == SOFTMAX_MODE:
        return raw
    return normalize_responses(raw)


def predict_multiclass(model: MulticlassHead, x: np.ndarray) -> Prediction:
    probs = probs_multiclass(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    cls = int(np.argmax(probs))
    return Prediction(class_probabilities=probs, predicted_class=cls,
                      confidence=float(probs[cls]))


def train_multiclass(x: np.ndarray, y: np.ndarray, k: int, mode: str,
                     cfg: SgdConfig, *, hidden_dims=(32,),
                     warm_start: MulticlassHead | None = None,
                     out_constraint: str | None = None) -> MulticlassHead:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    if k < 2:
        raise ValueError("need at least 2 classes")
    if mode not in HEAD_MODES:
        raise ValueError(f"unknown head mode {mode!r}")
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    if warm_start is not None and mode != OVA_MODE:
        raise ValueError("warm start is for one-vs-all retraining")
    if out_constraint is None:
        out_constraint = NONNEG if mode == OVA_MODE else UNCONSTRAINED

    rng = np.random.default_rng(cfg.seed)
    if warm_start is not None:
        trunk = copy_net(warm_start.trunk)
        out = copy_net([warm_start.out])[0]
        out.constraint = out_constraint
        if out_constraint == NONNEG:
            np.maximum(out.w, 0.0, out=out.w)  # clip once; projection keeps it
        trunk_frozen = True
    else:
        trunk, feat_dim = _build_trunk(x.shape[1], hidden_dims, rng)
        out = Dense(k, feat_dim, constraint=out_constraint, rng=rng)
        trunk_frozen = False

    model = MulticlassHead(k=k, mode=mode, trunk=trunk, out=out,
                           trunk_frozen=trunk_frozen)
    net = model.net
    onehot = np.eye(k)[y]
    velocity = init_velocity([out] if trunk_frozen else net)
    n = len(y)
    for _ in range(cfg.epochs):
        for idx in minibatches(n, cfg.batch_size, rng):
            logits, tape = forward(net, x[idx])
            if mode == SOFTMAX_MODE:
                _, dlogits = softmax_cross_entropy(logits, y[idx])
            else:
                # per-head BCE through each sigmoid; the fused gradient is p - t
                dlogits = sigmoid(logits) - onehot[idx]
            grads = backward(tape, dlogits / len(idx))
            if trunk_frozen:
                velocity = sgd_step([out], [grads.param_grads[-1]], cfg, velocity)
            else:
                velocity = sgd_step(net, grads.param_grads, cfg, velocity)
    return model
