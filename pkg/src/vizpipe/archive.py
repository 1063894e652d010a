"""Raw tensor archive: the byte-exact image container the CNN consumes.

Layout (integers little-endian):
  magic "VZTENS01" | u32 H | u32 W | u32 K | K x (u16 length + utf8 label)
  | u64 record count | per record: u8 label (0xFF = unlabeled) + H*W*3 bytes
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from vizpipe.errors import ArchiveError, LabelRangeError

MAGIC = b"VZTENS01"
UNLABELED = 0xFF


def write_archive(
    path: str | Path,
    images: np.ndarray,
    labels,
    class_labels,
) -> None:
    """Write (N, H, W, 3) uint8 images with optional per-record labels."""
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[3] != 3 or images.dtype != np.uint8:
        raise ArchiveError(
            f"expected (N, H, W, 3) uint8 images, got {images.shape} {images.dtype}"
        )
    n, h, w = images.shape[:3]
    class_labels = tuple(class_labels)
    k = len(class_labels)
    if k == 0 or k >= UNLABELED:
        raise ArchiveError(f"class label table must have 1..{UNLABELED - 1} entries, got {k}")
    if len(labels) != n:
        raise ArchiveError(f"{len(labels)} labels for {n} images")
    parts = [MAGIC, struct.pack("<III", h, w, k)]
    for label in class_labels:
        raw = label.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(struct.pack("<Q", n))
    for i in range(n):
        label = labels[i]
        if label is None:
            byte = UNLABELED
        else:
            if not 0 <= label < k:
                raise LabelRangeError(f"record {i}: label {label} outside [0, {k})")
            byte = int(label)
        parts.append(struct.pack("<B", byte))
        parts.append(np.ascontiguousarray(images[i]).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_archive(path: str | Path) -> tuple[np.ndarray, list[int | None], tuple[str, ...]]:
    """Read back (images, labels, class_labels); validates the exact byte count."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(count: int) -> bytes:
        nonlocal pos
        if pos + count > len(data):
            raise ArchiveError(f"{path}: truncated archive")
        out = data[pos : pos + count]
        pos += count
        return out

    if take(len(MAGIC)) != MAGIC:
        raise ArchiveError(f"{path}: not a tensor archive")
    h, w, k = struct.unpack("<III", take(12))
    class_labels = []
    for _ in range(k):
        (length,) = struct.unpack("<H", take(2))
        class_labels.append(take(length).decode("utf-8"))
    (n,) = struct.unpack("<Q", take(8))
    record_bytes = h * w * 3
    images = np.zeros((n, h, w, 3), dtype=np.uint8)
    labels: list[int | None] = []
    for i in range(n):
        (byte,) = struct.unpack("<B", take(1))
        if byte == UNLABELED:
            labels.append(None)
        elif byte < k:
            labels.append(byte)
        else:
            raise ArchiveError(f"{path}: record {i} label {byte} outside [0, {k})")
        images[i] = np.frombuffer(take(record_bytes), dtype=np.uint8).reshape(h, w, 3)
    if pos != len(data):
        raise ArchiveError(f"{path}: trailing bytes after archive payload")
    return images, labels, tuple(class_labels)
