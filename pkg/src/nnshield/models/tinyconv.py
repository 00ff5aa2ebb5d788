"""Byte-level convnet: embedding, gated convolution, global max pool, dense.

Inputs are fixed-length token sequences over [0, 256] where 256 is the EOF
padding token. With eof_row_zeroed the EOF embedding row is pinned to the
zero vector and receives no gradient, removing padding itself as a signal
the model could learn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..binfmt import to_padded_sequence
from ..nn import (UNCONSTRAINED, Dense, Embedding, GatedConv1D,
                  GlobalMaxPool1D, SgdConfig, Sigmoid, backward,
                  binary_cross_entropy, forward, init_velocity, minibatches,
                  sgd_step)

VOCAB = 257
EOF_ROW = 256

# full-scale padding length; desk configs override (see build_tinyconv callers)
PAPER_PAD_LEN = 2_100_000
DESK_PAD_LEN = 4_096


@dataclass
class TinyConv:
    net: list  # [Embedding, GatedConv1D, GlobalMaxPool1D, Dense, Sigmoid]
    pad_len: int
    constraint: str
    eof_row_zeroed: bool

    @property
    def embedding(self) -> Embedding:
        return self.net[0]

    @property
    def dense(self) -> Dense:
        return self.net[3]


def build_tinyconv(*, embed_dim: int = 8, filters: int = 32, width: int = 16,
                   stride: int = 4, pad_len: int = PAPER_PAD_LEN,
                   constraint: str = UNCONSTRAINED, eof_row_zeroed: bool = False,
                   seed: int = 0) -> TinyConv:
    if pad_len < width:
        raise ValueError(f"pad_len {pad_len} shorter than filter width {width}")
    rng = np.random.default_rng(seed)
    frozen = (EOF_ROW,) if eof_row_zeroed else ()
    net = [Embedding(VOCAB, embed_dim, constraint=constraint, rng=rng, frozen_rows=frozen),
           GatedConv1D(filters, width, embed_dim, stride=stride, constraint=constraint, rng=rng),
           GlobalMaxPool1D(),
           Dense(1, filters, constraint=constraint, rng=rng),
           Sigmoid()]
    return TinyConv(net=net, pad_len=pad_len, constraint=constraint,
                    eof_row_zeroed=eof_row_zeroed)


def files_to_sequences(files, pad_len: int) -> np.ndarray:
    """Pad/truncate each byte stream to pad_len tokens; rows are int64."""
    return np.stack([to_padded_sequence(bytes(f), pad_len).tokens for f in files])


def exes_to_sequences(exes, pad_len: int) -> np.ndarray:
    """Padded sequences for toy executables: the model scores payload bytes.

    On disk the section table precedes the payload and grows by one entry
    per section, so appending a section shifts every payload byte and
    realigns the convolution windows. The payload view keeps existing bytes
    at fixed offsets, making an appended section a pure suffix of the model
    input; the non-negative append guarantee needs exactly that.
    """
    return files_to_sequences([exe.payload for exe in exes], pad_len)


def _check_tokens(model: TinyConv, seqs: np.ndarray) -> np.ndarray:
    seqs = np.asarray(seqs)
    if seqs.ndim == 1:
        seqs = seqs[None]
    if seqs.shape[-1] != model.pad_len:
        raise ValueError(f"sequence length {seqs.shape[-1]} != pad_len {model.pad_len}")
    return seqs


def tinyconv_scores(model: TinyConv, seqs: np.ndarray) -> np.ndarray:
    out, _ = forward(model.net, _check_tokens(model, seqs))
    return out[:, 0]


def embed_tokens(model: TinyConv, seqs: np.ndarray) -> np.ndarray:
    """Token rows through the embedding only: (B, pad_len, embed_dim)."""
    z, _ = model.embedding.forward(_check_tokens(model, seqs))
    return z


def scores_from_embedding(model: TinyConv, z: np.ndarray):
    """Forward from embedded input; returns (scores, tape over the trunk).

    The tape's input gradient is the loss gradient w.r.t. z, which is what
    embedding-space attacks differentiate.
    """
    out, tape = forward(model.net[1:], z)
    return out[..., 0], tape


def train_tinyconv(model: TinyConv, seqs: np.ndarray, labels: np.ndarray,
                   cfg: SgdConfig) -> TinyConv:
    seqs = _check_tokens(model, seqs)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if seqs.shape[0] != labels.shape[0]:
        raise ValueError("sequence/label count mismatch")
    if len(np.unique(labels)) < 2:
        raise ValueError("training set has a single class")
    rng = np.random.default_rng(cfg.seed)
    velocity = init_velocity(model.net)
    constrained = model.constraint != UNCONSTRAINED and cfg.project_nonneg
    for _ in range(cfg.epochs):
        for idx in minibatches(len(labels), cfg.batch_size, rng):
            out, tape = forward(model.net, seqs[idx])
            _, dpred = binary_cross_entropy(out[:, 0], labels[idx])
            dloss = np.zeros_like(out)
            dloss[:, 0] = dpred / len(idx)
            velocity = sgd_step(model.net, backward(tape, dloss).param_grads, cfg, velocity)
            if constrained:
                # the gate multiplies the response bank, so a negative response
                # bias would let added content lower an activation; clipping it
                # keeps the whole net monotone in appended bytes. The gate bias
                # and the final dense bias remain free (the decision rule needs
                # a reachable negative bias).
                gated = model.net[1]
                np.maximum(gated.bf, 0.0, out=gated.bf)
    return model
