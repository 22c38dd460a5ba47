"""Whole-frame reference models for every pipeline stage.

Float variants evaluate the ideal arithmetic; integer variants mirror the
datapath's truncation rules (floor after the 8-bit shift, floor division by
nine) so streaming results can be compared pixel-for-pixel.  Nothing here
touches the line buffers or the scheduler.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .filters import MAX_MAGNITUDE, SOBEL_X, SOBEL_Y, SobelConfig
from .lane_decision import DecisionConfig, LaneReport, decide
from .rgb2gray import DEFAULT_WEIGHTS, LUMA_COEFFS, GrayWeights, to_gray_array
from .stream_core import FrameGeometry


@dataclass
class FloatFrame:
    width: int
    height: int
    samples: np.ndarray  # (height, width) float64

    def __post_init__(self) -> None:
        if self.samples.shape != (self.height, self.width):
            raise ValueError(
                f"samples shape {self.samples.shape} != ({self.height}, {self.width})"
            )


def gray_float(p) -> float:
    r, g, b = p
    cr, cg, cb = LUMA_COEFFS
    return cr * r + cg * g + cb * b


def gray_float_array(rgb: np.ndarray) -> np.ndarray:
    a = np.asarray(rgb, dtype=np.float64)
    cr, cg, cb = LUMA_COEFFS
    return cr * a[..., 0] + cg * a[..., 1] + cb * a[..., 2]


def conv2d_ref(frame, kernel: Sequence[Sequence[float]]) -> FloatFrame:
    """Direct nested-loop 3x3 correlation, stride 1, zero padding, same size."""
    f = np.asarray(frame, dtype=np.float64)
    k = np.asarray(kernel, dtype=np.float64)
    if k.shape != (3, 3):
        raise ValueError("kernel must be 3x3")
    h, w = f.shape
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for i in range(3):
                rr = r - 1 + i
                if rr < 0 or rr >= h:
                    continue
                for j in range(3):
                    cc = c - 1 + j
                    if 0 <= cc < w:
                        acc += k[i, j] * f[rr, cc]
            out[r, c] = acc
    return FloatFrame(w, h, out)


def _shifted_sum(frame: np.ndarray, kernel) -> np.ndarray:
    """Exact integer 3x3 correlation with zero padding, as a sum of 9 shifted copies."""
    f = np.asarray(frame, dtype=np.int64)
    h, w = f.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.int64)
    padded[1:-1, 1:-1] = f
    acc = np.zeros((h, w), dtype=np.int64)
    for i in range(3):
        for j in range(3):
            coeff = kernel[i][j]
            if coeff:
                acc += coeff * padded[i : i + h, j : j + w]
    return acc


def average_int(gray: np.ndarray) -> np.ndarray:
    ones = ((1, 1, 1),) * 3
    return (_shifted_sum(gray, ones) // 9).astype(np.uint8)


def sobel_magnitude_int(gray: np.ndarray) -> np.ndarray:
    gx = _shifted_sum(gray, SOBEL_X)
    gy = _shifted_sum(gray, SOBEL_Y)
    mag = np.abs(gx) + np.abs(gy)
    assert mag.max(initial=0) <= MAX_MAGNITUDE
    return mag.astype(np.int32)


def binarize_int(mag: np.ndarray, cfg: SobelConfig = SobelConfig()) -> np.ndarray:
    return np.where(mag >= cfg.threshold, 255, 0).astype(np.uint8)


@dataclass
class RefResult:
    gray: np.ndarray
    avg: np.ndarray
    magnitude: np.ndarray
    binary: np.ndarray
    report: LaneReport


def pipeline_ref(
    image: np.ndarray,
    sobel_threshold: int = 100,
    weights: GrayWeights = DEFAULT_WEIGHTS,
    decision: DecisionConfig | None = None,
) -> RefResult:
    """Whole-frame integer pipeline: gray -> average -> Sobel -> binarize -> decide."""
    img = np.asarray(image)
    gray = to_gray_array(img, weights) if img.ndim == 3 else img.astype(np.uint8)
    avg = average_int(gray)
    mag = sobel_magnitude_int(avg)
    binary = binarize_int(mag, SobelConfig(sobel_threshold))
    h, w = binary.shape
    if decision is None:
        decision = DecisionConfig.for_geometry(FrameGeometry(w, h))
    return RefResult(gray, avg, mag, binary, decide(binary, decision))


def compare_stages(
    image: np.ndarray, streamed: dict[str, np.ndarray]
) -> dict[str, dict[str, float]]:
    """Max/mean absolute deviation of streamed stage frames from the float models."""
    img = np.asarray(image)
    gray_f = gray_float_array(img)
    avg_f = _shifted_sum(streamed["gray"], ((1, 1, 1),) * 3) / 9.0
    gx = _shifted_sum(streamed["avg"], SOBEL_X)
    gy = _shifted_sum(streamed["avg"], SOBEL_Y)
    mag_f = np.abs(gx) + np.abs(gy)
    refs = {"gray": gray_f, "avg": avg_f}
    if "sobel_magnitude" in streamed:
        refs["sobel_magnitude"] = mag_f
    out = {}
    for name, ref in refs.items():
        d = np.abs(streamed[name].astype(np.float64) - ref)
        out[name] = {"max": round(float(d.max()), 4), "mean": round(float(d.mean()), 4)}
    return out
