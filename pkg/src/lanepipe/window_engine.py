"""Line-buffered 3x3 window formation over a raster-order 8-bit stream.

Two row buffers hold the previous two rows; the live input supplies the
third.  Each fed pixel pushes one column ``(row_buffer_2[c], row_buffer_1[c],
pixel)`` into a 3x3 shift register.  The window centred at linear index
``k`` is complete once pixel ``k + N + 1`` (its bottom-right neighbour) has
been shifted in; taps that fall outside the frame are forced to zero.

Warm-up is ``N + 6`` fed pixels for row length ``N``: ``N + 2`` to reach the
first bottom-right neighbour, then a four-deep delay line (buffer read
register, two tap-alignment stages, compute register).  The window centred
at ``k`` therefore comes out on feed ``k + N + 6`` (1-based).  After the last
pixel of the frame the engine needs ``N + 5`` :meth:`WindowEngine.flush`
steps to emit the remaining bottom-border windows, so a frame always yields
exactly ``width * height`` windows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .stream_core import FrameGeometry

#: Delay between a window being complete in the shift register and its emission.
DELAY_STAGES = 4


class Window3x3(NamedTuple):
    taps: tuple[int, ...]  # row-major, 9 values
    center: tuple[int, int]  # (row, col)


class WindowOverflow(RuntimeError):
    """More pixels fed than the frame holds."""


@dataclass
class LineBufferState:
    row_buffer_1: list[int]
    row_buffer_2: list[int]
    shift_taps: list[list[int]]
    fill_count: int
    cursor: tuple[int, int]


def warmup_feeds(width: int) -> int:
    """1-based feed index of the first emitted window."""
    return width + 2 + DELAY_STAGES


class WindowEngine:
    def __init__(self, geometry: FrameGeometry = FrameGeometry()) -> None:
        self.geometry = geometry
        self._n = geometry.width
        self._h = geometry.height
        self._total = geometry.pixels
        self.frame_reset()

    def frame_reset(self) -> LineBufferState:
        n = self._n
        self._lb1 = [0] * n
        self._lb2 = [0] * n
        # shift register columns, oldest first: (top, mid, bottom)
        self._c0 = (0, 0, 0)
        self._c1 = (0, 0, 0)
        self._c2 = (0, 0, 0)
        self._t = 0  # advances so far (fed pixels + flush steps)
        self._fed = 0
        self._col = 0  # column of the next input
        self._krow = 0  # centre (row, col) of the next window to form
        self._kcol = 0
        self._kformed = 0
        self._emitted = 0
        self._delay: list[Optional[Window3x3]] = [None] * DELAY_STAGES
        self._dpos = 0
        return self.state()

    # -- observers ----------------------------------------------------------

    def state(self) -> LineBufferState:
        c0, c1, c2 = self._c0, self._c1, self._c2
        return LineBufferState(
            row_buffer_1=list(self._lb1),
            row_buffer_2=list(self._lb2),
            shift_taps=[[c0[r], c1[r], c2[r]] for r in range(3)],
            fill_count=self._t,
            cursor=divmod(self._fed, self._n) if self._fed < self._total else (self._h, 0),
        )

    @property
    def frame_fed(self) -> bool:
        """All pixels of the current frame have been fed."""
        return self._fed >= self._total

    @property
    def in_frame(self) -> bool:
        """At least one pixel of the current frame has been fed."""
        return self._fed > 0

    @property
    def flushing(self) -> bool:
        return self._fed >= self._total and self._emitted < self._total

    @property
    def done(self) -> bool:
        return self._emitted >= self._total

    @property
    def windows_emitted(self) -> int:
        return self._emitted

    # -- stepping -----------------------------------------------------------

    def feed(self, pixel: int) -> Optional[Window3x3]:
        if self._fed >= self._total:
            raise WindowOverflow(
                f"frame of {self._total} pixels already fed; call frame_reset()"
            )
        self._fed += 1
        return self._advance(pixel)

    def flush(self) -> Optional[Window3x3]:
        """Advance one step with padding once the frame is fully fed."""
        if self._fed < self._total:
            raise RuntimeError("flush() before the frame was fully fed")
        if self._emitted >= self._total:
            return None
        return self._advance(0)

    def _advance(self, pixel: int) -> Optional[Window3x3]:
        n = self._n
        c = self._col
        lb1, lb2 = self._lb1, self._lb2
        mid = lb1[c]
        col = (lb2[c], mid, pixel)
        lb2[c] = mid
        lb1[c] = pixel
        self._col = c + 1 if c + 1 < n else 0
        self._c0, self._c1, self._c2 = self._c1, self._c2, col

        formed = None
        # window centred at k = t - n - 1 is complete now
        if self._t >= n + 1 and self._kformed < self._total:
            formed = self._form()
        self._t += 1

        dpos = self._dpos
        out = self._delay[dpos]
        self._delay[dpos] = formed
        self._dpos = dpos + 1 if dpos + 1 < DELAY_STAGES else 0
        if out is not None:
            self._emitted += 1
        return out

    def _form(self) -> Window3x3:
        r, c = self._krow, self._kcol
        (t0, t3, t6), (t1, t4, t7), (t2, t5, t8) = self._c0, self._c1, self._c2
        if r == 0:
            t0 = t1 = t2 = 0
        elif r == self._h - 1:
            t6 = t7 = t8 = 0
        if c == 0:
            t0 = t3 = t6 = 0
        elif c == self._n - 1:
            t2 = t5 = t8 = 0
        self._kformed += 1
        if c + 1 < self._n:
            self._kcol = c + 1
        else:
            self._kcol = 0
            self._krow = r + 1
        return Window3x3((t0, t1, t2, t3, t4, t5, t6, t7, t8), (r, c))


def windows_for_frame(frame, geometry: Optional[FrameGeometry] = None) -> list[Window3x3]:
    """Feed a whole 2-D frame (rows of 8-bit values) and flush; returns all windows."""
    rows = [list(map(int, row)) for row in frame]
    if geometry is None:
        geometry = FrameGeometry(len(rows[0]), len(rows))
    eng = WindowEngine(geometry)
    out: list[Window3x3] = []
    for row in rows:
        for px in row:
            w = eng.feed(px)
            if w is not None:
                out.append(w)
    while not eng.done:
        w = eng.flush()
        if w is not None:
            out.append(w)
    return out
