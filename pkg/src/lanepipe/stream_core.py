"""Ready/valid streaming substrate and cycle scheduler.

Every stage owns one output register.  Between a stage and its consumer sits
a first-word-fall-through :class:`PixelQueue`: when the queue is empty and the
consumer is ready, data bypasses it in the same cycle, so queues add no
latency in a stall-free run and only absorb backpressure.

One call to :meth:`Pipeline.step` is one clock cycle:

1. ready is resolved combinationally from the sink back to the source;
2. every boundary where valid and ready are both high transfers one beat;
3. all stage registers update together (the clock edge).
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence


class ConfigurationError(ValueError):
    """Raised when a pipeline or stage is wired or parameterised wrongly."""


class QueueOverflow(RuntimeError):
    """Enqueue on a full queue; backpressure should have prevented it."""


@dataclass(frozen=True)
class FrameGeometry:
    width: int = 416
    height: int = 416

    def __post_init__(self) -> None:
        if self.width < 3 or self.height < 3:
            raise ConfigurationError(
                f"frame must be at least 3x3, got {self.width}x{self.height}"
            )

    @property
    def pixels(self) -> int:
        return self.width * self.height

    @classmethod
    def parse(cls, text: str) -> "FrameGeometry":
        """Parse ``WxH`` (e.g. ``416x416``)."""
        try:
            w, h = text.lower().split("x")
            return cls(int(w), int(h))
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"bad geometry {text!r}, expected WxH") from exc

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


@dataclass
class StreamBeat:
    data: int = 0
    valid: bool = False
    ready: bool = False

    @property
    def fires(self) -> bool:
        return self.valid and self.ready


@dataclass
class CycleStats:
    cycles_elapsed: int = 0
    transfers_in: int = 0
    transfers_out: int = 0
    first_output_cycle: Optional[int] = None
    stall_cycles: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class PixelQueue:
    """Bounded FIFO of 8-bit values."""

    def __init__(self, capacity: int = 416) -> None:
        if capacity < 1:
            raise ConfigurationError("queue capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[int] = deque()

    def __len__(self) -> int:
        return len(self._items)

    @property
    def occupancy(self) -> int:
        return len(self._items)

    @property
    def contents(self) -> list[int]:
        return list(self._items)

    def full(self) -> bool:
        return len(self._items) >= self.capacity

    def empty(self) -> bool:
        return not self._items

    def push(self, value: int) -> None:
        if len(self._items) >= self.capacity:
            raise QueueOverflow(f"enqueue on full queue (capacity {self.capacity})")
        self._items.append(value)

    def peek(self) -> int:
        return self._items[0]

    def pop(self) -> int:
        return self._items.popleft()


def estimate_frame_time(total_cycles: int, clock_hz: float) -> float:
    """Wall time of ``total_cycles`` at ``clock_hz``, in ms, rounded to 4 decimals."""
    if clock_hz <= 0:
        raise ValueError("clock_hz must be positive")
    ms = Fraction(total_cycles) * 1000 / Fraction(clock_hz)
    return round(float(ms), 4)


# ---------------------------------------------------------------------------
# Stall schedules
# ---------------------------------------------------------------------------


def parse_stall_schedule(lines: Iterable[str]) -> dict[int, bool]:
    """Parse ``cycle,ready_bit`` lines; cycles not listed default to ready."""
    schedule: dict[int, bool] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            cycle_s, bit_s = line.split(",")
            cycle, bit = int(cycle_s), int(bit_s)
        except ValueError as exc:
            raise ConfigurationError(f"stall schedule line {lineno}: {raw!r}") from exc
        if cycle < 0 or bit not in (0, 1):
            raise ConfigurationError(f"stall schedule line {lineno}: {raw!r}")
        schedule[cycle] = bool(bit)
    return schedule


def load_stall_schedule(path: str | Path) -> dict[int, bool]:
    with open(path) as fh:
        return parse_stall_schedule(fh)


def format_stall_schedule(schedule: Mapping[int, bool]) -> str:
    return "".join(f"{c},{int(r)}\n" for c, r in sorted(schedule.items()))


# ---------------------------------------------------------------------------
# Endpoints and stages
# ---------------------------------------------------------------------------


class Source:
    """Offers a fixed sequence of beats, one per cycle while accepted."""

    out_bits = 24

    def __init__(self, data: Sequence[int] = (), out_bits: int = 24) -> None:
        self._data = list(data)
        self._pos = 0
        self.out_bits = out_bits

    @property
    def valid(self) -> bool:
        return self._pos < len(self._data)

    @property
    def data(self) -> int:
        return self._data[self._pos]

    def take(self) -> int:
        value = self._data[self._pos]
        self._pos += 1
        return value

    @property
    def exhausted(self) -> bool:
        return self._pos >= len(self._data)


class Sink:
    """Records every accepted beat; ready follows an optional stall schedule."""

    in_bits: Optional[int] = None

    def __init__(self, schedule: Optional[Mapping[int, bool]] = None) -> None:
        self.schedule = dict(schedule or {})
        self.received: list[int] = []
        self.receive_cycles: list[int] = []

    def ready(self, cycle: int) -> bool:
        return self.schedule.get(cycle, True)

    def accept(self, cycle: int, data: int) -> None:
        self.received.append(data)
        self.receive_cycles.append(cycle)

    def tick(self, cycle: int) -> None:
        """Called once at the end of every cycle."""

    @property
    def busy(self) -> bool:
        return False


@dataclass
class StageStats:
    first_in_cycle: Optional[int] = None
    first_out_cycle: Optional[int] = None
    transfers_in: int = 0
    transfers_out: int = 0

    @property
    def latency(self) -> Optional[int]:
        if self.first_in_cycle is None or self.first_out_cycle is None:
            return None
        return self.first_out_cycle - self.first_in_cycle


class Stage:
    """Base class: a registered stage with one output beat.

    Subclasses implement :meth:`accepting` (whether input may be taken this
    cycle, given the register can advance) and :meth:`compute`, which runs on
    every clock edge where the stage advances and returns the next output
    register value or ``None``.
    """

    name = "stage"
    in_bits = 8
    out_bits = 8

    def __init__(self) -> None:
        self.out_valid = False
        self.out_data = 0
        self.stats = StageStats()
        self.tap: Optional[Callable[[int], None]] = None

    def accepting(self) -> bool:
        return True

    def wants_advance_without_input(self) -> bool:
        return False

    def compute(self, data: Optional[int]) -> Optional[int]:
        raise NotImplementedError

    @property
    def busy(self) -> bool:
        """True while data is still held internally."""
        return self.out_valid


class Pipeline:
    """A linear chain source -> stages -> sink driven one cycle at a time."""

    def __init__(
        self,
        source: Source,
        stages: Sequence[Stage],
        sink: Sink,
        queue_capacity: int = 416,
    ) -> None:
        chain = [source, *stages, sink]
        for i, node in enumerate(chain):
            if node is None:
                raise ConfigurationError(f"chain position {i} is unconnected")
        if not isinstance(source, Source):
            raise ConfigurationError("chain must start with a Source")
        if not isinstance(sink, Sink):
            raise ConfigurationError("chain must end with a Sink")
        for st in stages:
            if not isinstance(st, Stage):
                raise ConfigurationError(f"{st!r} is not a Stage")
        widths = [source.out_bits] + [s.out_bits for s in stages]
        consumers = list(stages) + [sink]
        for w, consumer in zip(widths, consumers):
            need = getattr(consumer, "in_bits", None)
            if need is not None and need != w:
                raise ConfigurationError(
                    f"{getattr(consumer, 'name', consumer)!r} expects {need}-bit input, "
                    f"upstream produces {w}-bit"
                )
        self.source = source
        self.stages = list(stages)
        self.sink = sink
        self.queues = [PixelQueue(queue_capacity) for _ in self.stages]
        self.cycle = 0
        self.stats = CycleStats()

    # -- one clock cycle ----------------------------------------------------

    def step(self) -> None:
        t = self.cycle
        stages = self.stages
        queues = self.queues
        n = len(stages)

        # Phase 1: combinational ready, sink -> source.  For each boundary i
        # (stage i -> consumer i+1) record what the consumer receives and
        # whether stage i's register drains.
        delivered: list[Optional[int]] = [None] * (n + 1)
        from_queue = [False] * n
        drains = [False] * n
        bypass = [False] * n
        advance = [False] * n

        consumer_ready = self.sink.ready(t)
        if n == 0:
            offered = self.source.valid
            if offered and consumer_ready:
                delivered[0] = self.source.data
            elif offered:
                self.stats.stall_cycles += 1
        for i in range(n - 1, -1, -1):
            st = stages[i]
            q = queues[i]
            qlen = len(q)
            if consumer_ready:
                if qlen:
                    delivered[i + 1] = q.peek()
                    from_queue[i] = True
                elif st.out_valid:
                    delivered[i + 1] = st.out_data
                    bypass[i] = True
            elif i == n - 1 and (qlen or st.out_valid):
                self.stats.stall_cycles += 1
            if st.out_valid:
                room = qlen - (1 if from_queue[i] else 0) < q.capacity
                drains[i] = bypass[i] or room
            can_advance = not st.out_valid or drains[i]
            advance[i] = can_advance
            consumer_ready = can_advance and st.accepting()

        if n and self.source.valid and consumer_ready:
            delivered[0] = self.source.data

        # Phase 2: transfers and the clock edge.
        if delivered[0] is not None:
            self.source.take()
            self.stats.transfers_in += 1
        for i in range(n):
            st = stages[i]
            q = queues[i]
            if from_queue[i]:
                q.pop()
            if drains[i]:
                if not bypass[i]:
                    q.push(st.out_data)
                ss = st.stats
                ss.transfers_out += 1
                if ss.first_out_cycle is None:
                    ss.first_out_cycle = t
                if st.tap is not None:
                    st.tap(st.out_data)
            inp = delivered[i]
            if inp is not None:
                ss = st.stats
                ss.transfers_in += 1
                if ss.first_in_cycle is None:
                    ss.first_in_cycle = t
            if advance[i]:
                if inp is not None or st.wants_advance_without_input():
                    result = st.compute(inp)
                else:
                    result = None
                if result is None:
                    st.out_valid = False
                else:
                    st.out_valid = True
                    st.out_data = result
        out = delivered[n]
        if out is not None:
            self.sink.accept(t, out)
            self.stats.transfers_out += 1
            if self.stats.first_output_cycle is None:
                self.stats.first_output_cycle = t
        self.sink.tick(t)
        self.cycle = t + 1
        self.stats.cycles_elapsed = self.cycle

    # -- drivers --------------------------------------------------------------

    def advance(self, cycles: int) -> CycleStats:
        for _ in range(cycles):
            self.step()
        return self.stats

    @property
    def idle(self) -> bool:
        return (
            self.source.exhausted
            and not any(st.busy for st in self.stages)
            and not any(len(q) for q in self.queues)
            and not self.sink.busy
        )

    def run_to_completion(self, max_cycles: int = 10_000_000) -> CycleStats:
        """Step until every beat has reached the sink and the sink is idle."""
        limit = self.cycle + max_cycles
        while not self.idle:
            if self.cycle >= limit:
                raise RuntimeError(f"pipeline did not drain within {max_cycles} cycles")
            self.step()
        return self.stats


def advance(
    stage_chain: Sequence[object], cycles: int, queue_capacity: int = 416
) -> CycleStats:
    """Drive ``[source, *stages, sink]`` for ``cycles`` cycles."""
    if len(stage_chain) < 2:
        raise ConfigurationError("a chain needs at least a source and a sink")
    source, *stages, sink = stage_chain
    pipe = Pipeline(source, stages, sink, queue_capacity)  # type: ignore[arg-type]
    return pipe.advance(cycles)
