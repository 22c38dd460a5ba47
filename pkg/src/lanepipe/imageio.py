"""Netpbm (P5/P6) codec plus PNG ingest.

PPM/PGM are the bit-exact native formats; PNG is only read, through Pillow.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    pass


def _tokens(buf: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping comments."""
    vals: list[int] = []
    i = 2
    n = len(buf)
    while len(vals) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i : i + 1] == b"#":
            while i < n and buf[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and buf[j : j + 1].isdigit():
            j += 1
        if j == i:
            raise ImageFormatError("truncated or malformed netpbm header")
        vals.append(int(buf[i:j]))
        i = j
    # exactly one whitespace byte separates the header from the raster
    return vals, i + 1


def decode_netpbm(buf: bytes) -> np.ndarray:
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported netpbm magic {magic!r}")
    (width, height, maxval), offset = _tokens(buf, 3)
    if maxval != 255:
        raise ImageFormatError(f"only 8-bit netpbm supported (maxval {maxval})")
    channels = 3 if magic == b"P6" else 1
    size = width * height * channels
    raster = buf[offset : offset + size]
    if len(raster) != size:
        raise ImageFormatError("raster shorter than header declares")
    img = np.frombuffer(raster, dtype=np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return img.reshape(shape).copy()


def encode_netpbm(img: np.ndarray) -> bytes:
    a = np.asarray(img)
    if a.dtype != np.uint8:
        if a.min(initial=0) < 0 or a.max(initial=0) > 255:
            raise ImageFormatError("pixel values outside 0..255")
        a = a.astype(np.uint8)
    if a.ndim == 2:
        magic = b"P5"
    elif a.ndim == 3 and a.shape[2] == 3:
        magic = b"P6"
    else:
        raise ImageFormatError(f"cannot encode array of shape {a.shape}")
    h, w = a.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(a).tobytes()


def read_image(path: str | Path) -> np.ndarray:
    """Load a PPM/PGM/PNG as uint8; gray images are expanded to RGB."""
    path = Path(path)
    buf = path.read_bytes()
    if buf[:2] in (b"P5", b"P6"):
        img = decode_netpbm(buf)
    elif buf[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image

        with Image.open(path) as im:
            img = np.asarray(im.convert("RGB"), dtype=np.uint8)
    else:
        raise ImageFormatError(f"{path}: not a PPM, PGM or PNG file")
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    return img


def write_pnm(path: str | Path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode_netpbm(img))
