"""Toy executable container ("toy-exe") plus byte-sequence padding.

On-disk layout, little-endian throughout:

    magic "TXE1" | u32 section_count | section entries | payload

Each section entry is 17 bytes: 8-byte name (NUL padded), u32 offset,
u32 length, u8 flags. Offsets are relative to the start of the payload,
which begins immediately after the last table entry, so growing the table
never shifts section contents.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"TXE1"

FLAG_EXEC = 1
FLAG_DATA = 2
FLAG_UNUSED = 4

_FLAG_NAMES = {FLAG_EXEC: "EXEC", FLAG_DATA: "DATA", FLAG_UNUSED: "UNUSED"}

_HEADER = struct.Struct("<4sI")
_ENTRY = struct.Struct("<8sIIB")

# padding symbol appended after real bytes; one past the largest byte value
EOF_TOKEN = 256

DEFAULT_MAX_SIZE = 1 << 20


class FormatError(ValueError):
    """Raised for bytes that do not form a valid toy-exe."""


def pad_name(name: str | bytes) -> bytes:
    raw = name.encode("ascii") if isinstance(name, str) else bytes(name)
    if len(raw) > 8:
        raise FormatError(f"section name longer than 8 bytes: {raw!r}")
    return raw.ljust(8, b"\x00")


@dataclass(frozen=True)
class Section:
    name: bytes
    offset: int
    length: int
    flags: int

    def __post_init__(self):
        if len(self.name) != 8:
            raise FormatError(f"section name must be exactly 8 bytes, got {len(self.name)}")
        if self.offset < 0 or self.length < 1:
            raise FormatError(f"invalid section extent (offset={self.offset}, length={self.length})")
        if self.flags not in _FLAG_NAMES:
            raise FormatError(f"section flags must be exactly one of EXEC/DATA/UNUSED, got {self.flags:#x}")


@dataclass(frozen=True)
class ToyExe:
    sections: tuple[Section, ...]
    payload: bytes

    def __post_init__(self):
        spans = []
        exec_count = 0
        for sec in self.sections:
            if sec.offset + sec.length > len(self.payload):
                raise FormatError(f"section {sec.name!r} extends past payload end")
            spans.append((sec.offset, sec.offset + sec.length, sec.name))
            if sec.flags == FLAG_EXEC:
                exec_count += 1
        if exec_count != 1:
            raise FormatError(f"expected exactly one EXEC section, found {exec_count}")
        spans.sort()
        for (_, end, name), (start, _, other) in zip(spans, spans[1:]):
            if start < end:
                raise FormatError(f"sections {name!r} and {other!r} overlap")

    def section_bytes(self, sec: Section) -> bytes:
        return self.payload[sec.offset:sec.offset + sec.length]

    def file_size(self) -> int:
        return _HEADER.size + _ENTRY.size * len(self.sections) + len(self.payload)


def make_exe(parts: list[tuple[str | bytes, int, bytes]]) -> ToyExe:
    """Lay out (name, flags, content) parts contiguously into a ToyExe."""
    sections = []
    payload = bytearray()
    for name, flags, content in parts:
        sections.append(Section(pad_name(name), len(payload), len(content), flags))
        payload.extend(content)
    return ToyExe(tuple(sections), bytes(payload))


def parse(data: bytes) -> ToyExe:
    if len(data) < _HEADER.size:
        raise FormatError(f"file too short for header ({len(data)} bytes)")
    magic, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    table_end = _HEADER.size + _ENTRY.size * count
    if len(data) < table_end:
        raise FormatError(f"file too short for {count} section entries")
    sections = []
    for i in range(count):
        name, offset, length, flags = _ENTRY.unpack_from(data, _HEADER.size + _ENTRY.size * i)
        try:
            sections.append(Section(name, offset, length, flags))
        except FormatError as err:
            raise FormatError(f"entry {i}: {err}") from None
    return ToyExe(tuple(sections), data[table_end:])


def serialize(exe: ToyExe) -> bytes:
    out = bytearray(_HEADER.pack(MAGIC, len(exe.sections)))
    for sec in exe.sections:
        out.extend(_ENTRY.pack(sec.name, sec.offset, sec.length, sec.flags))
    out.extend(exe.payload)
    return bytes(out)


def append_unused_section(exe: ToyExe, payload: bytes, *,
                          max_size: int = DEFAULT_MAX_SIZE) -> ToyExe:
    """Return a copy of ``exe`` with ``payload`` appended as a new UNUSED
    section. Prior sections keep their bytes and offsets."""
    if len(payload) == 0:
        raise ValueError("appended section payload must be non-empty")
    grown = exe.file_size() + _ENTRY.size + len(payload)
    if grown > max_size:
        raise ValueError(f"appending {len(payload)} bytes would grow the file to "
                         f"{grown} bytes, over the {max_size} limit")
    n_unused = sum(1 for s in exe.sections if s.flags == FLAG_UNUSED)
    name = pad_name(f"unused{n_unused}"[:8])
    sec = Section(name, len(exe.payload), len(payload), FLAG_UNUSED)
    return ToyExe(exe.sections + (sec,), exe.payload + payload)


def content_equal_except_unused(a: ToyExe, b: ToyExe) -> bool:
    """True iff ``b`` is ``a`` plus, possibly, extra appended UNUSED sections."""
    if len(b.sections) < len(a.sections):
        return False
    if b.payload[:len(a.payload)] != a.payload:
        return False
    for sa, sb in zip(a.sections, b.sections):
        if sa != sb:
            return False
    return all(s.flags == FLAG_UNUSED for s in b.sections[len(a.sections):])


def raw_append(data: bytes, payload: bytes, *, max_size: int = DEFAULT_MAX_SIZE) -> bytes:
    """Append raw bytes for headerless corpora (no container bookkeeping)."""
    if len(payload) == 0:
        raise ValueError("appended payload must be non-empty")
    if len(data) + len(payload) > max_size:
        raise ValueError(f"appending {len(payload)} bytes exceeds the {max_size} limit")
    return data + payload


@dataclass(frozen=True)
class PaddedSequence:
    """Fixed-length token view of a file: real bytes then EOF padding."""

    tokens: np.ndarray
    content_len: int


def to_padded_sequence(file_bytes: bytes, pad_len: int) -> PaddedSequence:
    """Truncate or EOF-pad ``file_bytes`` to exactly ``pad_len`` tokens."""
    if pad_len < 1:
        raise ValueError("pad_len must be at least 1")
    tokens = np.full(pad_len, EOF_TOKEN, dtype=np.int64)
    n = min(len(file_bytes), pad_len)
    tokens[:n] = np.frombuffer(file_bytes[:n], dtype=np.uint8)
    tokens.setflags(write=False)
    return PaddedSequence(tokens=tokens, content_len=n)
