"""8-bit fixed-point RGB to grayscale conversion."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .stream_core import ConfigurationError, Stage

#: Luma coefficients the fixed-point weights approximate.
LUMA_COEFFS = (0.2989, 0.587, 0.114)


class PixelRgb(NamedTuple):
    red: int
    green: int
    blue: int

    def pack(self) -> int:
        return (self.red << 16) | (self.green << 8) | self.blue

    @classmethod
    def unpack(cls, word: int) -> "PixelRgb":
        return cls((word >> 16) & 0xFF, (word >> 8) & 0xFF, word & 0xFF)


@dataclass(frozen=True)
class GrayWeights:
    """Q0.8 weights; must sum to exactly 256 so white maps to 255."""

    w_r: int = 77
    w_g: int = 150
    w_b: int = 29

    def __post_init__(self) -> None:
        for w in (self.w_r, self.w_g, self.w_b):
            if not 0 <= w <= 255:
                raise ConfigurationError(f"gray weight {w} outside 8-bit range")
        if self.w_r + self.w_g + self.w_b != 256:
            raise ConfigurationError(
                f"gray weights must sum to 256, got {self.w_r + self.w_g + self.w_b}"
            )

    @classmethod
    def parse(cls, text: str) -> "GrayWeights":
        try:
            r, g, b = (int(x) for x in text.split(","))
        except ValueError as exc:
            raise ConfigurationError(f"bad gray weights {text!r}, expected R,G,B") from exc
        return cls(r, g, b)


DEFAULT_WEIGHTS = GrayWeights()


def to_gray(p: PixelRgb | tuple[int, int, int], w: GrayWeights = DEFAULT_WEIGHTS) -> int:
    r, g, b = p
    return (w.w_r * r + w.w_g * g + w.w_b * b) >> 8


def to_gray_array(rgb: np.ndarray, w: GrayWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    """Vectorised :func:`to_gray` over an ``(..., 3)`` uint8 array."""
    rgb = np.asarray(rgb, dtype=np.uint32)
    acc = w.w_r * rgb[..., 0] + w.w_g * rgb[..., 1] + w.w_b * rgb[..., 2]
    return (acc >> 8).astype(np.uint8)


def pack_rgb_array(rgb: np.ndarray) -> list[int]:
    """Flatten an ``(H, W, 3)`` image into raster-order 24-bit words."""
    a = np.asarray(rgb, dtype=np.uint32)
    words = (a[..., 0] << 16) | (a[..., 1] << 8) | a[..., 2]
    return words.ravel().tolist()


class GrayStage(Stage):
    """Stage 1: one 24-bit beat in, one 8-bit beat out, one cycle later."""

    name = "gray"
    in_bits = 24
    out_bits = 8

    def __init__(self, weights: GrayWeights = DEFAULT_WEIGHTS) -> None:
        super().__init__()
        self.weights = weights
        self._wr, self._wg, self._wb = weights.w_r, weights.w_g, weights.w_b

    def compute(self, data: Optional[int]) -> Optional[int]:
        if data is None:
            return None
        return (
            self._wr * ((data >> 16) & 0xFF)
            + self._wg * ((data >> 8) & 0xFF)
            + self._wb * (data & 0xFF)
        ) >> 8
