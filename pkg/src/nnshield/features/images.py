"""IDX image/label file IO with [0, 1] pixel scaling."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxError(ValueError):
    """Raised for malformed IDX files."""


@dataclass(frozen=True)
class ImageSample:
    pixels: np.ndarray  # (H, W, C) float64 in [0, 1]
    label: int


def _read_exact(data: bytes, offset: int, count: int, what: str, path) -> bytes:
    if offset + count > len(data):
        raise IdxError(f"{path}: truncated while reading {what} "
                       f"(need {offset + count} bytes, have {len(data)})")
    return data[offset:offset + count]


def _load_images_array(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, = struct.unpack(">I", _read_exact(data, 0, 4, "magic", path))
    if magic != IDX_IMAGE_MAGIC:
        raise IdxError(f"{path}: bad image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}")
    count, rows, cols = struct.unpack(">III", _read_exact(data, 4, 12, "dimensions", path))
    raw = _read_exact(data, 16, count * rows * cols, "pixel data", path)
    return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)


def _load_labels_array(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, = struct.unpack(">I", _read_exact(data, 0, 4, "magic", path))
    if magic != IDX_LABEL_MAGIC:
        raise IdxError(f"{path}: bad label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}")
    count, = struct.unpack(">I", _read_exact(data, 4, 4, "count", path))
    raw = _read_exact(data, 8, count, "label data", path)
    return np.frombuffer(raw, dtype=np.uint8)


def load_idx_images(images_path, labels_path) -> list[ImageSample]:
    images = _load_images_array(images_path)
    labels = _load_labels_array(labels_path)
    if len(images) != len(labels):
        raise IdxError(f"count mismatch: {len(images)} images vs {len(labels)} labels")
    samples = []
    for img, label in zip(images, labels):
        pixels = (img.astype(np.float64) / 255.0)[:, :, None]
        pixels.setflags(write=False)
        samples.append(ImageSample(pixels=pixels, label=int(label)))
    return samples


def save_idx(images_path, labels_path, pixels_u8: np.ndarray, labels) -> None:
    """Write (N, H, W) uint8 pixels and N labels as an IDX pair."""
    pixels_u8 = np.asarray(pixels_u8, dtype=np.uint8)
    labels = np.asarray(labels)
    if pixels_u8.ndim != 3:
        raise ValueError(f"expected (N, H, W) pixels, got shape {pixels_u8.shape}")
    if len(pixels_u8) != len(labels):
        raise ValueError("image/label count mismatch")
    n, rows, cols = pixels_u8.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols))
        fh.write(pixels_u8.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        fh.write(labels.astype(np.uint8).tobytes())
