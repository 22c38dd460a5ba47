"""Synthetic road frames with painted vertical boundary stripes."""
from __future__ import annotations

import os
from typing import Optional, Sequence

import numpy as np

from .stream_core import FrameGeometry

SEED_ENV = "LANEPIPE_SEED"

WHITE_PAINT = (255, 255, 255)
YELLOW_PAINT = (255, 255, 0)


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Explicit seed, else ``$LANEPIPE_SEED``, else 0."""
    if seed is None:
        seed = int(os.environ.get(SEED_ENV, "0"))
    return np.random.default_rng(seed)


def road_image(
    geometry: FrameGeometry,
    boundaries: Sequence[int],
    stripe_width: int = 3,
    paint: Sequence[int] = WHITE_PAINT,
    background: Sequence[int] = (0, 0, 0),
    rows: Optional[tuple[int, int]] = None,
) -> np.ndarray:
    """RGB frame with full-height stripes centred on ``boundaries``.

    ``rows`` limits the painted rows to ``[top, bottom]``.
    """
    img = np.empty((geometry.height, geometry.width, 3), dtype=np.uint8)
    img[:] = np.asarray(background, dtype=np.uint8)
    top, bottom = rows if rows is not None else (0, geometry.height - 1)
    half = stripe_width // 2
    for b in boundaries:
        lo, hi = max(b - half, 0), min(b - half + stripe_width, geometry.width)
        img[top : bottom + 1, lo:hi] = np.asarray(paint, dtype=np.uint8)
    return img


def random_boundaries(
    rng: np.random.Generator,
    width: int,
    count: int,
    min_separation: int = 20,
    margin: int = 6,
) -> list[int]:
    """``count`` sorted columns at least ``min_separation`` apart, ``margin`` from the borders."""
    span = width - 1 - 2 * margin - (count - 1) * min_separation
    if span < 0:
        raise ValueError(f"cannot fit {count} boundaries in width {width}")
    # stars and bars: sorted offsets in [0, span], then spread by the separation
    offsets = np.sort(rng.integers(0, span + 1, size=count))
    return [int(margin + o + i * min_separation) for i, o in enumerate(offsets)]


def add_salt_pepper(img: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Set ``fraction`` of pixels (all channels) to 0 or 255 with equal odds."""
    out = img.copy()
    h, w = img.shape[:2]
    n = int(round(fraction * h * w))
    idx = rng.choice(h * w, size=n, replace=False)
    values = rng.integers(0, 2, size=n).astype(np.uint8) * 255
    flat = out.reshape(h * w, -1)
    flat[idx] = values[:, None]
    return out
