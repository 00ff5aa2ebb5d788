"""Finite-difference oracle for every layer kind.

Central differences with h = 1e-4 against the analytic backward pass. Nets
with ReLU or max-pooling are resampled until every kink sits at least 1e-3
away from the evaluation point, so the difference quotient stays valid.
"""

import numpy as np
import pytest

from nnshield.nn import (NONNEG, Conv1D, Dense, Embedding, GatedConv1D,
                         GlobalMaxPool1D, ReLU, Sigmoid, Softmax, backward,
                         forward)

H = 1e-4
RTOL = 1e-4
# absolute floor under the relative comparison; FD noise at h=1e-4 is ~1e-7
FLOOR = 1e-2


def projection_loss(out, direction):
    return float(np.sum(out * direction))


def fd_param_grads(net, x, direction):
    grads = []
    for layer in net:
        frozen = set(getattr(layer, "frozen_rows", ()))
        layer_grads = []
        for p in layer.params():
            g = np.zeros_like(p)
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                if isinstance(layer, Embedding) and idx[0] in frozen:
                    continue  # pinned rows are not free parameters
                orig = p[idx]
                p[idx] = orig + H
                hi = projection_loss(forward(net, x)[0], direction)
                p[idx] = orig - H
                lo = projection_loss(forward(net, x)[0], direction)
                p[idx] = orig
                g[idx] = (hi - lo) / (2 * H)
            layer_grads.append(g)
        grads.append(layer_grads)
    return grads


def fd_input_grad(net, x, direction):
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + H
        hi = projection_loss(forward(net, x)[0], direction)
        x[idx] = orig - H
        lo = projection_loss(forward(net, x)[0], direction)
        x[idx] = orig
        g[idx] = (hi - lo) / (2 * H)
    return g


def assert_close(analytic, fd):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), FLOOR)
    worst = np.max(np.abs(analytic - fd) / denom) if analytic.size else 0.0
    assert worst <= RTOL, f"gradient mismatch: relative error {worst:.3e}"


def well_conditioned(net, x):
    """True when no ReLU input or pooled maximum sits within 1e-3 of a kink."""
    h = x
    for layer in net:
        if isinstance(layer, ReLU):
            if np.min(np.abs(np.asarray(h))) < 1e-3:
                return False
        if isinstance(layer, GlobalMaxPool1D):
            hb = np.asarray(h, dtype=np.float64)
            if hb.ndim == 2:
                hb = hb[None]
            if hb.shape[1] >= 2:
                top = np.sort(hb, axis=1)
                if np.min(top[:, -1, :] - top[:, -2, :]) < 1e-3:
                    return False
        h, _ = layer.forward(h)
    return True


def build_case(name, rng):
    if name == "dense_sigmoid":
        net = [Dense(3, 4, rng=rng), Sigmoid()]
        x = rng.normal(size=(2, 4))
    elif name == "dense_relu_dense":
        net = [Dense(4, 3, constraint=NONNEG, rng=rng), ReLU(), Dense(2, 4, rng=rng)]
        x = rng.normal(size=(3, 3))
    elif name == "dense_softmax":
        net = [Dense(4, 3, rng=rng), Softmax()]
        x = rng.normal(size=(2, 3))
    elif name == "conv_sigmoid":
        net = [Conv1D(3, 3, 2, stride=2, rng=rng), Sigmoid()]
        x = rng.normal(size=(2, 9, 2))
    elif name == "gated_conv":
        net = [GatedConv1D(2, 3, 2, stride=1, rng=rng)]
        x = rng.normal(size=(2, 6, 2))
    elif name == "conv_pool_dense":
        net = [Conv1D(3, 2, 2, stride=1, rng=rng), GlobalMaxPool1D(), Dense(2, 3, rng=rng)]
        x = rng.normal(size=(2, 5, 2))
    elif name == "embed_conv_pool":
        net = [Embedding(7, 3, rng=rng, frozen_rows=(6,)),
               GatedConv1D(2, 2, 3, stride=1, rng=rng), GlobalMaxPool1D()]
        x = rng.integers(0, 7, size=(2, 5))
    else:
        raise AssertionError(name)
    return net, x


CASES = ["dense_sigmoid", "dense_relu_dense", "dense_softmax", "conv_sigmoid",
         "gated_conv", "conv_pool_dense", "embed_conv_pool"]


@pytest.mark.parametrize("seed", range(100))
def test_gradients_match_finite_differences(seed):
    name = CASES[seed % len(CASES)]
    for attempt in range(50):
        rng = np.random.default_rng(seed * 1000 + attempt)
        net, x = build_case(name, rng)
        if well_conditioned(net, x):
            break
    else:
        pytest.fail("could not sample a well-conditioned net")
    out, tape = forward(net, x)
    direction = np.random.default_rng(seed + 5_000_000).normal(size=out.shape)
    grads = backward(tape, direction)
    fd = fd_param_grads(net, x, direction)
    for layer_idx in range(len(net)):
        for an, num in zip(grads.param_grads[layer_idx], fd[layer_idx]):
            assert_close(an, num)
    if grads.input_grad is None:
        assert isinstance(net[0], Embedding)
    else:
        assert_close(grads.input_grad, fd_input_grad(net, x, direction))


def test_frozen_embedding_rows_have_zero_gradient():
    rng = np.random.default_rng(4)
    net = [Embedding(5, 2, rng=rng, frozen_rows=(4,)), Dense(3, 2, rng=rng)]
    tokens = np.array([[4, 1, 4, 2]])
    out, tape = forward(net, tokens)
    grads = backward(tape, np.ones_like(out))
    dtable = grads.param_grads[0][0]
    assert np.array_equal(dtable[4], np.zeros(2))
    assert np.any(dtable[1] != 0)
