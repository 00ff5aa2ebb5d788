"""Loss functions returning (loss, gradient-w.r.t.-prediction) pairs."""

from __future__ import annotations

import numpy as np

from .layers import softmax

# Probabilities are clamped into [EPS, 1-EPS] so losses stay finite; the
# sigmoid's own derivative still vanishes at saturation, which is the
# no-gradient failure mode attacks must be able to observe.
CLAMP_EPS = 1e-7


def binary_cross_entropy(pred, label):
    """Elementwise BCE. Gradient is w.r.t. the prediction; chained through a
    sigmoid it reduces to (pred - label) w.r.t. the pre-sigmoid logit."""
    p = np.clip(np.asarray(pred, dtype=np.float64), CLAMP_EPS, 1.0 - CLAMP_EPS)
    y = np.asarray(label, dtype=np.float64)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    dpred = (p - y) / (p * (1.0 - p))
    return loss, dpred


def softmax_cross_entropy(logits, label_indices):
    """Fused softmax + categorical cross-entropy over the last axis.

    Returns per-sample losses and the gradient w.r.t. the logits
    (probs - onehot), the numerically stable form used for training.
    """
    logits = np.asarray(logits, dtype=np.float64)
    probs = softmax(logits)
    idx = np.asarray(label_indices)
    flat = probs.reshape(-1, probs.shape[-1])
    flat_idx = idx.reshape(-1)
    picked = np.clip(flat[np.arange(flat.shape[0]), flat_idx], CLAMP_EPS, None)
    loss = -np.log(picked).reshape(idx.shape)
    dlogits = probs.copy()
    flat_d = dlogits.reshape(-1, probs.shape[-1])
    flat_d[np.arange(flat.shape[0]), flat_idx] -= 1.0
    return loss, dlogits
