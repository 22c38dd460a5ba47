"""3x3 averaging and Sobel kernels applied to windows, plus their stream stages."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .stream_core import ConfigurationError, FrameGeometry, Stage
from .window_engine import Window3x3, WindowEngine

SOBEL_X = ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))
SOBEL_Y = ((-1, -2, -1), (0, 0, 0), (1, 2, 1))
AVERAGE_KERNEL = tuple(tuple(1 / 9 for _ in range(3)) for _ in range(3))

MAX_MAGNITUDE = 4 * 255 + 4 * 255
WHITE = 255


@dataclass(frozen=True)
class SobelConfig:
    threshold: int = 100
    white_value: int = WHITE

    def __post_init__(self) -> None:
        if not 0 <= self.threshold <= MAX_MAGNITUDE:
            raise ConfigurationError(
                f"sobel threshold {self.threshold} outside [0, {MAX_MAGNITUDE}]"
            )
        if self.white_value != WHITE:
            raise ConfigurationError("white_value is fixed at 255")


def _taps(w: Window3x3 | Sequence[int]) -> Sequence[int]:
    return w.taps if isinstance(w, Window3x3) else w


def average(w: Window3x3 | Sequence[int]) -> int:
    return sum(_taps(w)) // 9


def sobel_gradients(w: Window3x3 | Sequence[int]) -> tuple[int, int]:
    t0, t1, t2, t3, _, t5, t6, t7, t8 = _taps(w)
    gx = (t2 + 2 * t5 + t8) - (t0 + 2 * t3 + t6)
    gy = (t6 + 2 * t7 + t8) - (t0 + 2 * t1 + t2)
    return gx, gy


def sobel_magnitude(w: Window3x3 | Sequence[int]) -> int:
    """L1 gradient magnitude ``|Gx| + |Gy|`` in ``[0, 2040]``."""
    gx, gy = sobel_gradients(w)
    return abs(gx) + abs(gy)


def binarize(mag: int, cfg: SobelConfig = SobelConfig()) -> int:
    return WHITE if mag >= cfg.threshold else 0


class WindowStage(Stage):
    """A window engine followed by a per-window kernel and an output register.

    Input is taken while the current frame still has pixels to receive; once
    it has all of them the stage keeps advancing on its own to flush the
    bottom-border windows and then resets for the next frame.
    """

    def __init__(self, geometry: FrameGeometry, kernel: Callable[[Window3x3], int]) -> None:
        super().__init__()
        self.engine = WindowEngine(geometry)
        self.kernel = kernel
        self.window_tap: Optional[Callable[[Window3x3], None]] = None

    def accepting(self) -> bool:
        return not self.engine.frame_fed

    def wants_advance_without_input(self) -> bool:
        return self.engine.flushing

    def compute(self, data: Optional[int]) -> Optional[int]:
        eng = self.engine
        w = eng.feed(data) if data is not None else eng.flush()
        if eng.done:
            eng.frame_reset()
        if w is None:
            return None
        if self.window_tap is not None:
            self.window_tap(w)
        return self.kernel(w)

    @property
    def busy(self) -> bool:
        return self.out_valid or self.engine.in_frame


class AverageStage(WindowStage):
    name = "avg"

    def __init__(self, geometry: FrameGeometry = FrameGeometry()) -> None:
        super().__init__(geometry, average)


class SobelStage(WindowStage):
    """Sobel magnitude and binarisation in the same compute cycle."""

    name = "sobel"

    def __init__(
        self,
        geometry: FrameGeometry = FrameGeometry(),
        cfg: SobelConfig = SobelConfig(),
        record_magnitudes: bool = False,
    ) -> None:
        self.cfg = cfg
        self.magnitudes: Optional[list[int]] = [] if record_magnitudes else None
        super().__init__(geometry, self._kernel)

    def _kernel(self, w: Window3x3) -> int:
        mag = sobel_magnitude(w.taps)
        if self.magnitudes is not None:
            self.magnitudes.append(mag)
        return WHITE if mag >= self.cfg.threshold else 0
