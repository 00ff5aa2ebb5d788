"""Boolean feature spaces over byte n-grams and word bags.

Vocabulary frequency is presence counting: each distinct token counts once
per file, matching the boolean feature model downstream. Ordering is count
descending with lexicographic ascending tokens as the tie-break, so the same
corpus always yields the same column layout.
"""

from __future__ import annotations

import base64
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..ioutil import canonical_dumps, sha256_hex

BYTE_NGRAM = "byte_ngram"
WORD_BAG = "word_bag"

DEFAULT_TOP_WORDS = 10_000

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class FeatureSpace:
    kind: str
    n: int | None
    vocabulary: tuple

    def __post_init__(self):
        if self.kind == BYTE_NGRAM:
            if self.n is None or self.n < 1:
                raise ValueError("byte n-gram space needs n >= 1")
            for tok in self.vocabulary:
                if not isinstance(tok, bytes) or len(tok) != self.n:
                    raise ValueError(f"vocabulary entry {tok!r} is not a {self.n}-byte gram")
        elif self.kind == WORD_BAG:
            if self.n is not None:
                raise ValueError("word-bag space takes n = None")
            for tok in self.vocabulary:
                if not isinstance(tok, str):
                    raise ValueError(f"vocabulary entry {tok!r} is not a word")
        else:
            raise ValueError(f"unknown feature-space kind {self.kind!r}")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError("vocabulary entries must be unique")

    @cached_property
    def index(self) -> dict:
        return {tok: i for i, tok in enumerate(self.vocabulary)}

    @property
    def dims(self) -> int:
        return len(self.vocabulary)

    @cached_property
    def space_id(self) -> str:
        return sha256_hex(canonical_dumps(space_to_doc(self)).encode("ascii"))


@dataclass(frozen=True)
class BooleanVector:
    dims: int
    set_indices: tuple[int, ...]

    def __post_init__(self):
        prev = -1
        for i in self.set_indices:
            if i <= prev or i >= self.dims:
                raise ValueError("set_indices must be strictly increasing and < dims")
            prev = i

    def dense(self) -> np.ndarray:
        x = np.zeros(self.dims)
        if self.set_indices:
            x[list(self.set_indices)] = 1.0
        return x

    def with_added(self, extra) -> "BooleanVector":
        return BooleanVector(self.dims, tuple(sorted(set(self.set_indices) | set(extra))))


def _file_grams(data: bytes, n: int) -> set:
    return {data[i:i + n] for i in range(len(data) - n + 1)}


def _top_tokens(counts: Counter, top: int) -> tuple:
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(tok for tok, _ in ranked[:top])


def build_ngram_space(corpus, n: int, top_m: int) -> FeatureSpace:
    """Two passes: exact presence counts over the corpus, then top-m selection."""
    if n < 1 or top_m < 1:
        raise ValueError("n and top_m must be positive")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    counts = Counter()
    for data in corpus:
        counts.update(_file_grams(bytes(data), n))
    return FeatureSpace(BYTE_NGRAM, n, _top_tokens(counts, top_m))


def featurize_bytes(space: FeatureSpace, data: bytes) -> BooleanVector:
    if space.kind != BYTE_NGRAM:
        raise ValueError(f"featurize_bytes needs a byte n-gram space, got {space.kind}")
    index = space.index
    hits = {index[g] for g in _file_grams(bytes(data), space.n) if g in index}
    return BooleanVector(space.dims, tuple(sorted(hits)))


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; everything else is a separator."""
    return _WORD_RE.findall(text.lower())


def build_word_space(texts, top_k: int = DEFAULT_TOP_WORDS) -> FeatureSpace:
    if top_k < 1:
        raise ValueError("top_k must be positive")
    texts = list(texts)
    if not texts:
        raise ValueError("empty corpus")
    counts = Counter()
    for text in texts:
        counts.update(set(tokenize(text)))
    return FeatureSpace(WORD_BAG, None, _top_tokens(counts, top_k))


def featurize_text(space: FeatureSpace, text: str) -> BooleanVector:
    if space.kind != WORD_BAG:
        raise ValueError(f"featurize_text needs a word-bag space, got {space.kind}")
    index = space.index
    hits = {index[w] for w in set(tokenize(text)) if w in index}
    return BooleanVector(space.dims, tuple(sorted(hits)))


def stack_dense(vectors) -> np.ndarray:
    """Stack BooleanVectors into an (n_samples, dims) float matrix."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no vectors to stack")
    dims = vectors[0].dims
    if any(v.dims != dims for v in vectors):
        raise ValueError("vectors disagree on dims")
    x = np.zeros((len(vectors), dims))
    for row, vec in enumerate(vectors):
        if vec.set_indices:
            x[row, list(vec.set_indices)] = 1.0
    return x


def space_to_doc(space: FeatureSpace) -> dict:
    def encode(tok):
        raw = tok if isinstance(tok, bytes) else tok.encode("utf-8")
        return base64.b64encode(raw).decode("ascii")

    return {"kind": space.kind, "n": space.n,
            "vocabulary": [encode(tok) for tok in space.vocabulary]}


def space_from_doc(doc: dict) -> FeatureSpace:
    kind = doc["kind"]
    raw = [base64.b64decode(e) for e in doc["vocabulary"]]
    if kind == WORD_BAG:
        vocab = tuple(r.decode("utf-8") for r in raw)
    else:
        vocab = tuple(raw)
    return FeatureSpace(kind, doc["n"], vocab)
