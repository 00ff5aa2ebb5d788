"""Forward/backward drivers over an ordered list of layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import Layer, ShapeError


@dataclass
class GradTape:
    """Everything backward needs: the net, per-layer caches, and the output."""

    net: list[Layer]
    caches: list
    output: np.ndarray


@dataclass
class Gradients:
    """Per-layer parameter gradients plus the gradient w.r.t. the net input.

    ``input_grad`` is None when the first layer consumes discrete symbols
    (Embedding); attacks that need an input gradient run on the layers after
    the embedding.
    """

    param_grads: list[list[np.ndarray]]
    input_grad: np.ndarray | None


def forward(net: list[Layer], x) -> tuple[np.ndarray, GradTape]:
    caches = []
    h = x
    for i, layer in enumerate(net):
        try:
            h, cache = layer.forward(h)
        except ShapeError as err:
            raise err.with_index(i) from None
        caches.append(cache)
    return h, GradTape(net=list(net), caches=caches, output=h)


def backward(tape: GradTape, loss_grad: np.ndarray) -> Gradients:
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    out = np.asarray(tape.output)
    if loss_grad.shape != out.shape:
        raise ValueError(f"loss_grad shape {loss_grad.shape} does not match output shape {out.shape}")
    n = len(tape.net)
    if len(tape.caches) != n:
        raise ValueError("tape does not match net (cache count differs)")
    param_grads: list = [None] * n
    dy = loss_grad
    for i in range(n - 1, -1, -1):
        dx, grads = tape.net[i].backward(tape.caches[i], dy)
        param_grads[i] = grads
        if dx is None and i > 0:
            raise ValueError(f"layer {i} ({tape.net[i].kind}) yields no input gradient but is not first")
        dy = dx
    return Gradients(param_grads=param_grads, input_grad=dy)
