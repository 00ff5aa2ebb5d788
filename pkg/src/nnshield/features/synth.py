"""Synthetic corpora with planted class-exclusive tokens.

Positives carry at least one planted positive token, negatives at least one
planted negative token, and both classes share a pool of noise tokens drawn
at noise_rate. Planted tokens never leak into the other class: in byte modes
every chunk boundary carries a 0xFF separator and filler bytes stay in
0x80-0xFF, so an ASCII planted gram cannot arise by accident. Ground truth
is echoed back so tests can assert which coefficients must vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..binfmt import FLAG_EXEC, ToyExe, make_exe

WORDS = "words"
BYTES = "bytes"
TOYEXE = "toyexe"

MODES = (WORDS, BYTES, TOYEXE)

_SEP = b"\xff"


@dataclass(frozen=True)
class SynthSpec:
    mode: str
    n_samples: int
    n_features: int
    planted_positive_tokens: tuple[str, ...]
    planted_negative_tokens: tuple[str, ...]
    noise_rate: float
    seed: int
    gram_len: int = 6
    pos_len_range: tuple[int, int] | None = None
    neg_len_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown synth mode {self.mode!r}")
        if self.n_samples < 2 or self.n_features < 1:
            raise ValueError("need n_samples >= 2 and n_features >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        pos, neg = set(self.planted_positive_tokens), set(self.planted_negative_tokens)
        if not pos or not neg:
            raise ValueError("each class needs at least one planted token")
        if pos & neg:
            raise ValueError(f"planted token sets overlap: {sorted(pos & neg)}")
        if self.mode != WORDS:
            for tok in list(pos) + list(neg):
                if not tok.isascii() or not tok:
                    raise ValueError(f"byte-mode planted tokens must be non-empty ASCII: {tok!r}")
        if self.mode == WORDS and (self.pos_len_range or self.neg_len_range):
            raise ValueError("length ranges apply to byte modes only")
        for rng_ in (self.pos_len_range, self.neg_len_range):
            if rng_ is not None and not (0 < rng_[0] <= rng_[1]):
                raise ValueError(f"bad length range {rng_}")


@dataclass(frozen=True)
class SynthCorpus:
    mode: str
    samples: list
    labels: np.ndarray
    planted_positive: tuple
    planted_negative: tuple


def _pick_planted(rng: np.random.Generator, planted: tuple) -> list:
    chosen = [tok for tok in planted if rng.random() < 0.6]
    if not chosen:
        chosen = [planted[rng.integers(0, len(planted))]]
    return chosen


def _pick_noise(rng: np.random.Generator, pool: list, rate: float) -> list:
    return [tok for tok in pool if rng.random() < rate]


def _draw_byte_pool(rng: np.random.Generator, spec: SynthSpec, planted: list[bytes]) -> list[bytes]:
    pool: list[bytes] = []
    while len(pool) < spec.n_features:
        tok = bytes(rng.integers(0, 256, spec.gram_len, dtype=np.uint8))
        if tok in pool:
            continue
        if any(p in tok or tok in p for p in planted):
            continue
        pool.append(tok)
    return pool


def _byte_sample(rng: np.random.Generator, chunks: list[bytes],
                 len_range: tuple[int, int] | None) -> bytes:
    order = rng.permutation(len(chunks))
    content = _SEP.join(chunks[i] for i in order)
    if len_range is not None:
        target = int(rng.integers(len_range[0], len_range[1] + 1))
        if len(content) < target:
            filler = rng.integers(0x80, 0x100, target - len(content) - 1, dtype=np.uint8)
            content = content + _SEP + filler.tobytes()
    return content


def generate_synthetic(spec: SynthSpec) -> SynthCorpus:
    rng = np.random.default_rng(spec.seed)
    labels = np.array([i % 2 for i in range(spec.n_samples)], dtype=np.int64)

    if spec.mode == WORDS:
        pos = tuple(spec.planted_positive_tokens)
        neg = tuple(spec.planted_negative_tokens)
        reserved = set(pos) | set(neg)
        pool = [w for i in range(10 * spec.n_features)
                if (w := f"w{i:04d}") not in reserved][:spec.n_features]
        samples = []
        for label in labels:
            words = _pick_planted(rng, pos if label else neg)
            words += _pick_noise(rng, pool, spec.noise_rate)
            order = rng.permutation(len(words))
            samples.append(" ".join(words[i] for i in order))
        return SynthCorpus(spec.mode, samples, labels, pos, neg)

    pos = tuple(t.encode("ascii") for t in spec.planted_positive_tokens)
    neg = tuple(t.encode("ascii") for t in spec.planted_negative_tokens)
    pool = _draw_byte_pool(rng, spec, list(pos) + list(neg))
    samples = []
    for label in labels:
        chunks = _pick_planted(rng, pos if label else neg)
        chunks += _pick_noise(rng, pool, spec.noise_rate)
        content = _byte_sample(rng, chunks, spec.pos_len_range if label else spec.neg_len_range)
        if spec.mode == BYTES:
            samples.append(content)
        else:
            samples.append(make_exe([("main", FLAG_EXEC, content)]))
    return SynthCorpus(spec.mode, samples, labels, pos, neg)
