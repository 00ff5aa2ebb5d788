"""Differentiable layers with manual forward/backward passes.

Every layer works on float64 numpy arrays and supports an optional leading
batch dimension. ``forward`` returns ``(output, cache)`` where ``cache`` holds
whatever ``backward`` needs; layers themselves stay stateless across calls so
a trained net can be shared read-only between threads.
"""

from __future__ import annotations

import numpy as np

UNCONSTRAINED = "none"
NONNEG = "nonneg"

CONSTRAINTS = (UNCONSTRAINED, NONNEG)


class ShapeError(ValueError):
    """Input shape incompatible with a layer; carries layer context."""

    def __init__(self, kind: str, expected: str, got: tuple, layer_index: int | None = None):
        self.kind = kind
        self.expected = expected
        self.got = tuple(got)
        self.layer_index = layer_index
        super().__init__(self._format())

    def _format(self) -> str:
        where = f"layer {self.layer_index} ({self.kind})" if self.layer_index is not None else self.kind
        return f"{where}: expected input {self.expected}, got shape {self.got}"

    def with_index(self, index: int) -> "ShapeError":
        return ShapeError(self.kind, self.expected, self.got, layer_index=index)


def glorot_span(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def _init_weight(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int, constraint: str) -> np.ndarray:
    s = glorot_span(fan_in, fan_out)
    lo = 0.0 if constraint == NONNEG else -s
    return rng.uniform(lo, s, size=shape)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (no overflow for any finite x)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(v: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis (max-subtraction before exp)."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ValueError("softmax of empty input")
    z = v - v.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Layer:
    """Base layer. Subclasses define kind, params and the two passes."""

    kind = "layer"
    constraint = UNCONSTRAINED

    def params(self) -> list[np.ndarray]:
        return []

    def param_names(self) -> list[str]:
        return []

    def weight_flags(self) -> list[bool]:
        """Aligned with params(); True marks entries clipped under NONNEG (biases stay exempt)."""
        return []

    def config(self) -> dict:
        return {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache, dy):
        raise NotImplementedError


class Dense(Layer):
    kind = "dense"

    def __init__(self, out_dim: int, in_dim: int, *, constraint: str = UNCONSTRAINED,
                 rng: np.random.Generator | None = None):
        if out_dim < 1 or in_dim < 1:
            raise ValueError(f"invalid Dense dims ({out_dim}, {in_dim})")
        self.out_dim = out_dim
        self.in_dim = in_dim
        self.constraint = constraint
        rng = rng if rng is not None else np.random.default_rng(0)
        self.w = _init_weight(rng, (out_dim, in_dim), in_dim, out_dim, constraint)
        self.b = np.zeros(out_dim)

    def params(self):
        return [self.w, self.b]

    def param_names(self):
        return ["w", "b"]

    def weight_flags(self):
        return [True, False]

    def config(self):
        return {"out_dim": self.out_dim, "in_dim": self.in_dim}

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim < 1 or x.shape[-1] != self.in_dim:
            raise ShapeError(self.kind, f"(..., {self.in_dim})", x.shape)
        return x @ self.w.T + self.b, x

    def backward(self, cache, dy):
        x = cache
        x2 = x.reshape(-1, self.in_dim)
        dy2 = dy.reshape(-1, self.out_dim)
        dw = dy2.T @ x2
        db = dy2.sum(axis=0)
        dx = dy @ self.w
        return dx, [dw, db]


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        # strict > 0: subgradient at exactly 0 is 0
        mask = x > 0
        return np.where(mask, x, 0.0), mask

    def backward(self, cache, dy):
        return dy * cache, []


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x):
        y = sigmoid(x)
        return y, y

    def backward(self, cache, dy):
        y = cache
        return dy * y * (1.0 - y), []


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x):
        y = softmax(x)
        return y, y

    def backward(self, cache, dy):
        y = cache
        inner = (dy * y).sum(axis=-1, keepdims=True)
        return y * (dy - inner), []


class Embedding(Layer):
    """Lookup table mapping integer symbols to learned vectors.

    ``frozen_rows`` stay pinned at zero: they are zero-initialized and their
    gradient is dropped, so no training step can move them.
    """

    kind = "embedding"

    def __init__(self, vocab_size: int, embed_dim: int, *, constraint: str = UNCONSTRAINED,
                 rng: np.random.Generator | None = None, frozen_rows: tuple[int, ...] = ()):
        if vocab_size < 1 or embed_dim < 1:
            raise ValueError(f"invalid Embedding dims ({vocab_size}, {embed_dim})")
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.constraint = constraint
        self.frozen_rows = tuple(sorted(frozen_rows))
        rng = rng if rng is not None else np.random.default_rng(0)
        self.table = _init_weight(rng, (vocab_size, embed_dim), vocab_size, embed_dim, constraint)
        for r in self.frozen_rows:
            self.table[r] = 0.0

    def params(self):
        return [self.table]

    def param_names(self):
        return ["table"]

    def weight_flags(self):
        return [True]

    def config(self):
        return {"vocab_size": self.vocab_size, "embed_dim": self.embed_dim,
                "frozen_rows": list(self.frozen_rows)}

    def forward(self, x):
        tokens = np.asarray(x)
        if not np.issubdtype(tokens.dtype, np.integer):
            raise ShapeError(self.kind, "integer token array", tokens.shape)
        if tokens.size and (tokens.min() < 0 or tokens.max() >= self.vocab_size):
            raise ValueError(f"embedding token out of range [0, {self.vocab_size})")
        return self.table[tokens], tokens

    def backward(self, cache, dy):
        tokens = cache
        dtable = np.zeros_like(self.table)
        np.add.at(dtable, tokens.reshape(-1), dy.reshape(-1, self.embed_dim))
        for r in self.frozen_rows:
            dtable[r] = 0.0
        # discrete input: no input gradient exists
        return None, [dtable]


def _conv_windows(x: np.ndarray, width: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather (B, L_out, width, D) sliding windows plus the index map used to scatter back."""
    length = x.shape[1]
    l_out = (length - width) // stride + 1
    idx = (np.arange(l_out) * stride)[:, None] + np.arange(width)[None, :]
    return x[:, idx, :], idx


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    filters, width, in_dim = w.shape
    win, _ = _conv_windows(x, width, stride)
    batch, l_out = win.shape[0], win.shape[1]
    y = win.reshape(batch, l_out, width * in_dim) @ w.reshape(filters, width * in_dim).T
    return y + b


def _conv_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray, stride: int):
    filters, width, in_dim = w.shape
    win, idx = _conv_windows(x, width, stride)
    batch, l_out = win.shape[0], win.shape[1]
    dy2 = dy.reshape(batch * l_out, filters)
    dw = (dy2.T @ win.reshape(batch * l_out, width * in_dim)).reshape(w.shape)
    db = dy2.sum(axis=0)
    dwin = (dy2 @ w.reshape(filters, width * in_dim)).reshape(batch, l_out, width, in_dim)
    dx = np.zeros_like(x)
    np.add.at(dx, (slice(None), idx), dwin)
    return dx, dw, db


class _ConvBase(Layer):
    """Shared plumbing for 1-d valid convolutions with stride."""

    def __init__(self, filters: int, width: int, in_dim: int, stride: int):
        if filters < 1 or width < 1 or in_dim < 1 or stride < 1:
            raise ValueError(f"invalid conv dims (filters={filters}, width={width}, in_dim={in_dim}, stride={stride})")
        self.filters = filters
        self.width = width
        self.in_dim = in_dim
        self.stride = stride

    def config(self):
        return {"filters": self.filters, "width": self.width,
                "in_dim": self.in_dim, "stride": self.stride}

    def _check_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            squeeze = True
            xb = x[None]
        elif x.ndim == 3:
            squeeze = False
            xb = x
        else:
            raise ShapeError(self.kind, f"(L, {self.in_dim}) or (B, L, {self.in_dim})", x.shape)
        if xb.shape[-1] != self.in_dim or xb.shape[1] < self.width:
            raise ShapeError(self.kind, f"(..., L >= {self.width}, {self.in_dim})", x.shape)
        return xb, squeeze


class Conv1D(_ConvBase):
    kind = "conv1d"

    def __init__(self, filters: int, width: int, in_dim: int, stride: int = 1, *,
                 constraint: str = UNCONSTRAINED, rng: np.random.Generator | None = None):
        super().__init__(filters, width, in_dim, stride)
        self.constraint = constraint
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = width * in_dim
        self.w = _init_weight(rng, (filters, width, in_dim), fan_in, filters, constraint)
        self.b = np.zeros(filters)

    def params(self):
        return [self.w, self.b]

    def param_names(self):
        return ["w", "b"]

    def weight_flags(self):
        return [True, False]

    def forward(self, x):
        xb, squeeze = self._check_batch(x)
        y = _conv_forward(xb, self.w, self.b, self.stride)
        return (y[0] if squeeze else y), (xb, squeeze)

    def backward(self, cache, dy):
        xb, squeeze = cache
        dyb = dy[None] if squeeze else dy
        dx, dw, db = _conv_backward(xb, self.w, dyb, self.stride)
        return (dx[0] if squeeze else dx), [dw, db]


class GatedConv1D(_ConvBase):
    """Two parallel filter banks combined as conv_f(x) * sigmoid(conv_g(x))."""

    kind = "gated_conv1d"

    def __init__(self, filters: int, width: int, in_dim: int, stride: int = 1, *,
                 constraint: str = UNCONSTRAINED, rng: np.random.Generator | None = None):
        super().__init__(filters, width, in_dim, stride)
        self.constraint = constraint
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = width * in_dim
        self.wf = _init_weight(rng, (filters, width, in_dim), fan_in, filters, constraint)
        self.bf = np.zeros(filters)
        self.wg = _init_weight(rng, (filters, width, in_dim), fan_in, filters, constraint)
        self.bg = np.zeros(filters)

    def params(self):
        return [self.wf, self.bf, self.wg, self.bg]

    def param_names(self):
        return ["wf", "bf", "wg", "bg"]

    def weight_flags(self):
        return [True, False, True, False]

    def forward(self, x):
        xb, squeeze = self._check_batch(x)
        a = _conv_forward(xb, self.wf, self.bf, self.stride)
        g = sigmoid(_conv_forward(xb, self.wg, self.bg, self.stride))
        y = a * g
        return (y[0] if squeeze else y), (xb, a, g, squeeze)

    def backward(self, cache, dy):
        xb, a, g, squeeze = cache
        dyb = dy[None] if squeeze else dy
        da = dyb * g
        dpre_g = dyb * a * g * (1.0 - g)
        dx_f, dwf, dbf = _conv_backward(xb, self.wf, da, self.stride)
        dx_g, dwg, dbg = _conv_backward(xb, self.wg, dpre_g, self.stride)
        dx = dx_f + dx_g
        return (dx[0] if squeeze else dx), [dwf, dbf, dwg, dbg]


class GlobalMaxPool1D(Layer):
    """Max over the time axis; gradient routes to the first argmax on ties."""

    kind = "global_max_pool1d"

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            squeeze = True
            xb = x[None]
        elif x.ndim == 3:
            squeeze = False
            xb = x
        else:
            raise ShapeError(self.kind, "(L, F) or (B, L, F)", x.shape)
        arg = xb.argmax(axis=1)
        y = np.take_along_axis(xb, arg[:, None, :], axis=1)[:, 0, :]
        return (y[0] if squeeze else y), (xb.shape, arg, squeeze)

    def backward(self, cache, dy):
        shape, arg, squeeze = cache
        dyb = dy[None] if squeeze else dy
        dx = np.zeros(shape)
        np.put_along_axis(dx, arg[:, None, :], dyb[:, None, :], axis=1)
        return (dx[0] if squeeze else dx), []
