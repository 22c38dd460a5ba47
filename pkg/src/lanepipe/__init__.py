"""Cycle-accurate model of a streaming Sobel lane-detection datapath.

Stages: fixed-point RGB->gray, line-buffered 3x3 averaging, Sobel with
binarisation, and a band-histogram lane decision.  Alongside sit bit-level
I2C emulation and the light / temperature control units it feeds.
"""
from .filters import SobelConfig, average, binarize, sobel_magnitude
from .lane_decision import DecisionConfig, LaneReport, cluster_boundaries, column_histogram, locate
from .pipeline import SimulationResult, simulate
from .rgb2gray import GrayWeights, PixelRgb, to_gray
from .stream_core import CycleStats, FrameGeometry, Pipeline, estimate_frame_time
from .window_engine import Window3x3, WindowEngine

__all__ = [
    "CycleStats",
    "DecisionConfig",
    "FrameGeometry",
    "GrayWeights",
    "LaneReport",
    "Pipeline",
    "PixelRgb",
    "SimulationResult",
    "SobelConfig",
    "Window3x3",
    "WindowEngine",
    "average",
    "binarize",
    "cluster_boundaries",
    "column_histogram",
    "estimate_frame_time",
    "locate",
    "simulate",
    "sobel_magnitude",
    "to_gray",
]

__version__ = "0.1.0"
