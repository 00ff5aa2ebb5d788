"""Byte-stable JSON and hashing helpers shared across modules."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path


def canonical_dumps(doc) -> str:
    """JSON with sorted keys and fixed separators: equal docs → equal bytes."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_bytes_atomic(path: Path | str, data: bytes) -> None:
    """Write via a same-directory temp file + rename so readers never see a
    partial file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_text_atomic(path: Path | str, text: str) -> None:
    write_bytes_atomic(path, text.encode("utf-8"))
