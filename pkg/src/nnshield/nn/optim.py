"""Momentum SGD with a non-negativity projection after every update.

The projection clips weight entries to max(value, 0) immediately after the
parameter update; bias entries are never clipped (the decision rule needs a
negative bias to be reachable).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import NONNEG, Layer


@dataclass
class SgdConfig:
    learning_rate: float
    momentum: float = 0.0
    epochs: int = 1
    batch_size: int = 32
    seed: int = 0
    project_nonneg: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


def init_velocity(net: list[Layer]) -> list[list[np.ndarray]]:
    return [[np.zeros_like(p) for p in layer.params()] for layer in net]


def sgd_step(net: list[Layer], param_grads: list[list[np.ndarray]], cfg: SgdConfig,
             velocity: list[list[np.ndarray]] | None = None) -> list[list[np.ndarray]]:
    """One in-place momentum SGD update followed by the projection.

    Returns the velocity buffers; pass them back in to carry momentum across
    steps.
    """
    if velocity is None:
        velocity = init_velocity(net)
    for layer, grads, vels in zip(net, param_grads, velocity):
        for p, g, v in zip(layer.params(), grads, vels):
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in {layer.kind} layer")
            v *= cfg.momentum
            v -= cfg.learning_rate * g
            p += v
        if cfg.project_nonneg and layer.constraint == NONNEG:
            for p, is_weight in zip(layer.params(), layer.weight_flags()):
                if is_weight:
                    np.maximum(p, 0.0, out=p)
    return velocity


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    """Yield index arrays covering a shuffled range, last batch possibly short."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]
