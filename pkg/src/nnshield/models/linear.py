"""Binary logistic regression in two defensive flavors.

NonNegative mode projects the coefficient vector onto w >= 0 after every
update and adds no penalty; Lasso mode adds an L1 penalty realized as a
per-step proximal soft-threshold so coefficients can land on exact zeros.
The bias is never penalized or clipped in either mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import (NONNEG, UNCONSTRAINED, Dense, SgdConfig, Sigmoid, backward,
                  binary_cross_entropy, forward, init_velocity, minibatches,
                  sgd_step, sigmoid)

LASSO = "lasso"
NONNEGATIVE = "nonnegative"

MODES = (LASSO, NONNEGATIVE)


@dataclass(frozen=True)
class LinearModel:
    w: np.ndarray
    b: float
    mode: str
    lasso_lambda: float = 0.0
    feature_space_id: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown linear mode {self.mode!r}")
        if self.lasso_lambda < 0:
            raise ValueError("lasso_lambda must be non-negative")
        self.w.setflags(write=False)


def _soft_threshold(w: np.ndarray, amount: float) -> None:
    w[...] = np.sign(w) * np.maximum(np.abs(w) - amount, 0.0)


def train_linear(x: np.ndarray, y: np.ndarray, mode: str, cfg: SgdConfig, *,
                 lasso_lambda: float = 0.0,
                 feature_space_id: str | None = None) -> LinearModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"feature matrix {x.shape} does not match {y.shape[0]} labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError(f"training set has a single class {classes.tolist()}")
    if mode not in MODES:
        raise ValueError(f"unknown linear mode {mode!r}")
    if mode == NONNEGATIVE and lasso_lambda != 0.0:
        raise ValueError("NonNegative mode takes no L1 penalty")

    constraint = NONNEG if mode == NONNEGATIVE else UNCONSTRAINED
    rng = np.random.default_rng(cfg.seed)
    dense = Dense(1, x.shape[1], constraint=constraint, rng=rng)
    net = [dense, Sigmoid()]
    velocity = init_velocity(net)
    n = x.shape[0]
    for _ in range(cfg.epochs):
        for idx in minibatches(n, cfg.batch_size, rng):
            out, tape = forward(net, x[idx])
            _, dpred = binary_cross_entropy(out[:, 0], y[idx])
            dloss = np.zeros_like(out)
            dloss[:, 0] = dpred / len(idx)
            velocity = sgd_step(net, backward(tape, dloss).param_grads, cfg, velocity)
            if mode == LASSO and lasso_lambda > 0.0:
                _soft_threshold(dense.w, cfg.learning_rate * lasso_lambda)
    return LinearModel(w=dense.w[0].copy(), b=float(dense.b[0]), mode=mode,
                       lasso_lambda=lasso_lambda, feature_space_id=feature_space_id)


def linear_scores(model: LinearModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.w.shape[0]:
        raise ValueError(f"feature vector length {x.shape[-1]} != {model.w.shape[0]}")
    return sigmoid(x @ model.w + model.b)


def predict_linear(model: LinearModel, x: np.ndarray) -> tuple[bool, float]:
    """Decision and score for one sample; a margin of exactly 0 is positive."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.w.shape[0]:
        raise ValueError(f"feature vector length {x.shape[0]} != {model.w.shape[0]}")
    margin = float(model.w @ x + model.b)
    return margin >= 0.0, float(sigmoid(np.array(margin)))
