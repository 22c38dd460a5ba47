"""Lane identification from a binary edge frame.

A horizontal band near the bottom of the frame is reduced to a per-column
count of white pixels.  Columns whose count reaches a fraction of the band
height are boundary candidates; runs of candidates closer than ``merge_gap``
collapse into one boundary at their count-weighted centroid.  Lanes are the
intervals between adjacent boundaries, and the current lane is the one that
contains the image centre column.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .filters import WHITE
from .stream_core import ConfigurationError, FrameGeometry, Sink

#: Cycles from the final band pixel to the report register: histogram
#: commit, candidate/cluster scan, locate + output register.
DECISION_LATENCY = 3
#: Upper bound the decision latency must respect.
DECISION_BUDGET = 16


@dataclass(frozen=True)
class DecisionConfig:
    band_top_row: int = 300
    band_bottom_row: int = 415
    column_hit_fraction: float = 0.30
    merge_gap: int = 10
    center_column: Optional[int] = None  # None -> width // 2

    def __post_init__(self) -> None:
        if not 0 <= self.band_top_row < self.band_bottom_row:
            raise ConfigurationError("need 0 <= band_top_row < band_bottom_row")
        if not 0 < self.column_hit_fraction <= 1:
            raise ConfigurationError("column_hit_fraction must be in (0, 1]")
        if self.merge_gap < 1:
            raise ConfigurationError("merge_gap must be >= 1")

    @property
    def band_height(self) -> int:
        return self.band_bottom_row - self.band_top_row + 1

    def center_for(self, width: int) -> int:
        return width // 2 if self.center_column is None else self.center_column

    def validate(self, geometry: FrameGeometry) -> None:
        if self.band_bottom_row >= geometry.height:
            raise ConfigurationError(
                f"band rows {self.band_top_row}..{self.band_bottom_row} "
                f"outside frame height {geometry.height}"
            )

    @classmethod
    def for_geometry(cls, geometry: FrameGeometry, **overrides) -> "DecisionConfig":
        """Defaults scaled to ``geometry``; at 416x416 these are rows 300..415."""
        top = geometry.height * 300 // 416
        params = dict(band_top_row=top, band_bottom_row=geometry.height - 1)
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class LaneReport:
    lane_count: int = 0
    current_index: Optional[int] = None
    left_boundary: Optional[int] = None
    right_boundary: Optional[int] = None
    valid: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "LaneReport":
        return cls(**{k: d[k] for k in ("lane_count", "current_index",
                                        "left_boundary", "right_boundary", "valid")})


def column_histogram(binary_frame, cfg: DecisionConfig) -> list[int]:
    frame = np.asarray(binary_frame)
    if frame.ndim != 2 or cfg.band_bottom_row >= frame.shape[0]:
        raise ConfigurationError(
            f"band rows {cfg.band_top_row}..{cfg.band_bottom_row} outside frame "
            f"of shape {frame.shape}"
        )
    band = frame[cfg.band_top_row : cfg.band_bottom_row + 1]
    return (band == WHITE).sum(axis=0).astype(int).tolist()


def cluster_boundaries(counts: Sequence[int], cfg: DecisionConfig) -> list[int]:
    min_hits = cfg.column_hit_fraction * cfg.band_height
    candidates = [c for c, n in enumerate(counts) if n >= min_hits]
    clusters: list[list[int]] = []
    for c in candidates:
        if clusters and c - clusters[-1][-1] <= cfg.merge_gap:
            clusters[-1].append(c)
        else:
            clusters.append([c])
    out = []
    for cl in clusters:
        num = sum(c * counts[c] for c in cl)
        den = sum(counts[c] for c in cl)
        if den == 0:  # only possible with a zero hit threshold
            out.append((cl[0] + cl[-1] + 1) // 2)
        else:
            out.append((2 * num + den) // (2 * den))  # round half up
    return out


def locate(boundaries: Sequence[int], cfg: DecisionConfig, width: int = 416) -> LaneReport:
    center = cfg.center_for(width)
    b = list(boundaries)
    lanes = max(len(b) - 1, 0)
    if lanes < 1 or not b[0] <= center < b[-1]:
        return LaneReport(lane_count=lanes)
    for i in range(lanes):
        if b[i] <= center < b[i + 1]:
            return LaneReport(lanes, i, b[i], b[i + 1], True)
    raise AssertionError("unreachable: center inside [first, last)")


def decide(binary_frame, cfg: DecisionConfig) -> LaneReport:
    frame = np.asarray(binary_frame)
    counts = column_histogram(frame, cfg)
    return locate(cluster_boundaries(counts, cfg), cfg, frame.shape[1])


class LaneDecisionSink(Sink):
    """Terminal consumer of the binary pixel stream.

    Accumulates the band histogram as pixels arrive; the report for a frame
    becomes valid :data:`DECISION_LATENCY` cycles after its final band pixel.
    """

    in_bits = 8

    def __init__(
        self,
        geometry: FrameGeometry = FrameGeometry(),
        cfg: Optional[DecisionConfig] = None,
        keep_frames: bool = True,
        schedule=None,
    ) -> None:
        super().__init__(schedule)
        self.geometry = geometry
        self.cfg = cfg or DecisionConfig.for_geometry(geometry)
        self.cfg.validate(geometry)
        self.keep_frames = keep_frames
        self.reports: list[LaneReport] = []
        self.report_cycles: list[int] = []
        self.last_band_cycles: list[int] = []
        self._pending: list[tuple[int, list[int]]] = []
        self._counts = [0] * geometry.width
        self._pos = 0
        self._band_start = self.cfg.band_top_row * geometry.width
        self._band_end = (self.cfg.band_bottom_row + 1) * geometry.width

    def accept(self, cycle: int, data: int) -> None:
        if self.keep_frames:
            super().accept(cycle, data)
        pos = self._pos
        if self._band_start <= pos < self._band_end:
            if data == WHITE:
                self._counts[pos % self.geometry.width] += 1
            if pos == self._band_end - 1:
                self.last_band_cycles.append(cycle)
                self._pending.append((cycle + DECISION_LATENCY, self._counts))
                self._counts = [0] * self.geometry.width
        pos += 1
        self._pos = 0 if pos == self.geometry.pixels else pos

    def tick(self, cycle: int) -> None:
        while self._pending and self._pending[0][0] <= cycle:
            _, counts = self._pending.pop(0)
            self.reports.append(
                locate(cluster_boundaries(counts, self.cfg), self.cfg, self.geometry.width)
            )
            self.report_cycles.append(cycle)

    @property
    def busy(self) -> bool:
        return bool(self._pending) or self._pos != 0

    def frames(self) -> list[np.ndarray]:
        """Received binary pixels reshaped into frames."""
        g = self.geometry
        data = np.asarray(self.received, dtype=np.uint8)
        nframes = len(data) // g.pixels
        return [
            data[i * g.pixels : (i + 1) * g.pixels].reshape(g.height, g.width)
            for i in range(nframes)
        ]
