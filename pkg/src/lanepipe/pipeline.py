"""Assemble the full datapath and run frames through it cycle by cycle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .filters import AverageStage, SobelConfig, SobelStage
from .lane_decision import DecisionConfig, LaneDecisionSink, LaneReport
from .rgb2gray import DEFAULT_WEIGHTS, GrayStage, GrayWeights, pack_rgb_array
from .stream_core import (
    ConfigurationError,
    CycleStats,
    FrameGeometry,
    Pipeline,
    Source,
    estimate_frame_time,
)
from .window_engine import Window3x3

DEFAULT_CLOCK_HZ = 150_000_000
STAGE_NAMES = ("gray", "avg", "sobel")


@dataclass
class SimulationResult:
    geometry: FrameGeometry
    stats: CycleStats
    reports: list[LaneReport]
    report_cycles: list[int]
    last_band_cycles: list[int]
    binary_frames: list[np.ndarray]
    first_in: dict[str, Optional[int]]
    first_out: dict[str, Optional[int]]
    sink_cycles: list[int]
    stage_frames: dict[str, list[np.ndarray]] = field(default_factory=dict)
    magnitudes: Optional[list[np.ndarray]] = None
    windows: Optional[list[Window3x3]] = None

    @property
    def stage_latency(self) -> dict[str, int]:
        """First output minus first input, per stage."""
        return {n: self.first_out[n] - self.first_in[n] for n in STAGE_NAMES}

    @property
    def stage_latencies(self) -> dict[str, int]:
        """Gray from first ingest; avg and sobel cumulative from the first gray beat."""
        base = self.first_in["avg"]
        return {
            "gray": self.first_out["gray"] - self.first_in["gray"],
            "avg": self.first_out["avg"] - base,
            "sobel": self.first_out["sobel"] - base,
        }

    @property
    def decision_latency(self) -> list[int]:
        return [r - b for r, b in zip(self.report_cycles, self.last_band_cycles)]

    def frame_time_ms(self, clock_hz: float = DEFAULT_CLOCK_HZ) -> float:
        return estimate_frame_time(self.stats.cycles_elapsed, clock_hz)


def _reshape(values: Sequence[int], geometry: FrameGeometry, dtype) -> list[np.ndarray]:
    a = np.asarray(values, dtype=dtype)
    n = len(a) // geometry.pixels
    return [
        a[i * geometry.pixels : (i + 1) * geometry.pixels].reshape(geometry.height, geometry.width)
        for i in range(n)
    ]


def build_pipeline(
    frames: Sequence[np.ndarray],
    geometry: FrameGeometry = FrameGeometry(),
    sobel: SobelConfig = SobelConfig(),
    weights: GrayWeights = DEFAULT_WEIGHTS,
    decision: Optional[DecisionConfig] = None,
    stall_schedule: Optional[Mapping[int, bool]] = None,
    queue_capacity: int = 416,
    record_magnitudes: bool = False,
) -> Pipeline:
    words: list[int] = []
    for f in frames:
        f = np.asarray(f)
        if f.shape != (geometry.height, geometry.width, 3):
            raise ConfigurationError(
                f"frame shape {f.shape} does not match geometry {geometry} (RGB)"
            )
        words.extend(pack_rgb_array(f))
    stages = [
        GrayStage(weights),
        AverageStage(geometry),
        SobelStage(geometry, sobel, record_magnitudes=record_magnitudes),
    ]
    sink = LaneDecisionSink(geometry, decision, schedule=stall_schedule)
    return Pipeline(Source(words), stages, sink, queue_capacity)


def simulate(
    frames: Sequence[np.ndarray] | np.ndarray,
    geometry: FrameGeometry = FrameGeometry(),
    sobel: SobelConfig = SobelConfig(),
    weights: GrayWeights = DEFAULT_WEIGHTS,
    decision: Optional[DecisionConfig] = None,
    stall_schedule: Optional[Mapping[int, bool]] = None,
    queue_capacity: int = 416,
    capture: Sequence[str] = (),
    record_magnitudes: bool = False,
    record_windows: bool = False,
) -> SimulationResult:
    """Stream RGB frames through gray -> avg -> sobel -> decision until drained.

    ``capture`` names stages (``gray``, ``avg``) whose output streams are
    recorded and returned as frames in ``stage_frames``; ``sobel`` output is
    always available as ``binary_frames``.
    """
    if isinstance(frames, np.ndarray) and frames.ndim == 3:
        frames = [frames]
    pipe = build_pipeline(
        frames, geometry, sobel, weights, decision, stall_schedule, queue_capacity,
        record_magnitudes,
    )
    captured: dict[str, list[int]] = {}
    for st in pipe.stages:
        if st.name in capture and st.name != "sobel":
            buf: list[int] = []
            captured[st.name] = buf
            st.tap = buf.append
    windows: Optional[list[Window3x3]] = None
    if record_windows:
        windows = []
        pipe.stages[1].window_tap = windows.append  # type: ignore[attr-defined]

    pipe.run_to_completion()
    sink: LaneDecisionSink = pipe.sink  # type: ignore[assignment]
    sobel_stage: SobelStage = pipe.stages[2]  # type: ignore[assignment]
    return SimulationResult(
        geometry=geometry,
        stats=pipe.stats,
        reports=sink.reports,
        report_cycles=sink.report_cycles,
        last_band_cycles=sink.last_band_cycles,
        binary_frames=sink.frames(),
        first_in={s.name: s.stats.first_in_cycle for s in pipe.stages},
        first_out={s.name: s.stats.first_out_cycle for s in pipe.stages},
        sink_cycles=sink.receive_cycles,
        stage_frames={k: _reshape(v, geometry, np.uint8) for k, v in captured.items()},
        magnitudes=(
            _reshape(sobel_stage.magnitudes, geometry, np.int32)
            if sobel_stage.magnitudes is not None
            else None
        ),
        windows=windows,
    )
