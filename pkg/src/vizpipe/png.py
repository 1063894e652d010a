"""Minimal lossless PNG writer: 8-bit/channel truecolor, no interlacing."""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from vizpipe.layout import ImageTensor

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + kind
        + data
        + struct.pack(">I", zlib.crc32(kind + data) & 0xFFFFFFFF)
    )


def png_bytes(pixels: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as PNG bytes."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 pixels, got {pixels.shape} {pixels.dtype}")
    h, w = pixels.shape[:2]
    # bit depth 8, color type 2 (truecolor), no compression/filter/interlace flags
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    raw = b"".join(b"\x00" + pixels[row].tobytes() for row in range(h))
    return (
        _SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(raw, 9))
        + _chunk(b"IEND", b"")
    )


def export_png(img: ImageTensor | np.ndarray, path: str | Path) -> None:
    """Write an image tensor to a lossless PNG file."""
    pixels = img.pixels if isinstance(img, ImageTensor) else img
    data = png_bytes(np.ascontiguousarray(pixels))
    with open(path, "wb") as fh:
        fh.write(data)
