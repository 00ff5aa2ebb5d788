"""Labeled text corpora: an index file of "<label> <path>" lines.

Labels are "spam" (positive) and "ham" (negative); paths are relative to the
index file. Files are read as latin-1 so arbitrary bytes never fail decoding.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

LABELS = {"spam": 1, "ham": 0}


def load_mail_index(index_path) -> tuple[list[str], np.ndarray]:
    index_path = Path(index_path)
    base = index_path.parent
    texts = []
    labels = []
    for lineno, line in enumerate(index_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            label, rel = line.split(maxsplit=1)
        except ValueError:
            raise ValueError(f"{index_path}:{lineno}: expected '<label> <path>'") from None
        if label not in LABELS:
            raise ValueError(f"{index_path}:{lineno}: unknown label {label!r} (want spam/ham)")
        texts.append((base / rel).read_text(encoding="latin-1"))
        labels.append(LABELS[label])
    return texts, np.array(labels, dtype=np.int64)


def write_mail_corpus(directory, texts, labels) -> Path:
    """Write one file per text plus the index; returns the index path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = {1: "spam", 0: "ham"}
    lines = []
    for i, (text, label) in enumerate(zip(texts, labels)):
        rel = f"{names[int(label)]}{i:05d}.txt"
        (directory / rel).write_text(text, encoding="latin-1")
        lines.append(f"{names[int(label)]} {rel}")
    index_path = directory / "index.txt"
    index_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return index_path
