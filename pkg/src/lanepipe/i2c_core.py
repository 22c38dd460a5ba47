"""Bit-level I2C bus emulation: clock divider, master controller, sensor slaves.

The bus is open-drain: each line is the wired-AND of the master's drive and
every slave's drive.  Time advances in quarter periods of SCL, each lasting
``divisor`` system cycles.  Every slot on the wire (START, data bit, STOP) is
four quarters long::

    Q0  SCL low   master updates SDA
    Q1  SCL rises
    Q2  SCL high  START / STOP happen here by moving SDA; bits are stable
    Q3  SCL falls slaves update SDA on this edge

A passive :class:`BusMonitor` decodes the waveform into :class:`I2cEvent` s
independently of the master, and :func:`check_trace` validates both.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

LIGHT_SENSOR_ADDRESS = 0x23
TEMP_SENSOR_ADDRESS = 0x48

LIGHT_CONFIG_REG = 0x00
LIGHT_DATA_REG = 0x10
TEMP_DATA_REG = 0x00
TEMP_CONFIG_REG = 0x01


class ProtocolViolation(Exception):
    """A wire trace broke I2C framing rules."""


class BusBusy(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Clock divider
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClockDividerConfig:
    system_hz: int = 150_000_000
    target_scl_hz: int = 100_000

    def __post_init__(self) -> None:
        if self.system_hz <= 0 or self.target_scl_hz <= 0:
            raise ValueError("frequencies must be positive")

    @property
    def divisor(self) -> int:
        # ceil, so the produced SCL never exceeds the target
        return max(1, -(-self.system_hz // (4 * self.target_scl_hz)))

    @property
    def scl_period_cycles(self) -> int:
        return 4 * self.divisor

    @property
    def scl_hz(self) -> float:
        return self.system_hz / self.scl_period_cycles


def scl_tick_schedule(cfg: ClockDividerConfig, cycles: int) -> list[tuple[int, str]]:
    """SCL edges ``(cycle, "rise" | "fall")`` within the first ``cycles`` system cycles."""
    d = cfg.divisor
    edges = []
    for base in range(0, cycles, 4 * d):
        if base + d < cycles:
            edges.append((base + d, "rise"))
        if base + 3 * d < cycles:
            edges.append((base + 3 * d, "fall"))
    return edges


# ---------------------------------------------------------------------------
# Events and transactions
# ---------------------------------------------------------------------------


class EventKind(str, Enum):
    START = "START"
    STOP = "STOP"
    BIT = "BIT"
    ACK = "ACK"
    NACK = "NACK"


@dataclass(frozen=True)
class I2cEvent:
    kind: EventKind
    sda: int
    scl_phase: int  # quarter within the slot where it was observed
    cycle: int


class Direction(str, Enum):
    WRITE = "W"
    READ = "R"


@dataclass
class I2cTransaction:
    address: int
    direction: Direction
    register: int
    payload: bytes = b""
    events: list[I2cEvent] = field(default_factory=list)
    waveform: list[tuple[int, int, int]] = field(default_factory=list)
    acked: bool = False
    data_valid: bool = False


# ---------------------------------------------------------------------------
# Slaves
# ---------------------------------------------------------------------------


class SensorDevice:
    """Register-mapped I2C slave.

    Registers are fixed-width byte strings, big-endian on the wire.  A write
    sets the register pointer with its first data byte; following bytes fill
    the register from its MSB and are committed at STOP (or repeated START).
    Reads stream the pointed register and then release the bus (0xFF).
    Unknown register pointers and writes past the register width are NACKed.
    """

    def __init__(self, address: int, registers: dict[int, bytes], kind: str = "generic") -> None:
        if not 0 <= address < 0x80:
            raise ValueError(f"7-bit address expected, got {address:#x}")
        self.address = address
        self.kind = kind
        self.registers: dict[int, bytearray] = {r: bytearray(v) for r, v in registers.items()}
        self.sda_out = 1
        self._reset_fsm()

    # -- register access for stimulus / inspection ---------------------------

    def read_register(self, reg: int) -> bytes:
        return bytes(self.registers[reg])

    def set_register(self, reg: int, value: bytes) -> None:
        self.registers[reg] = bytearray(value)

    # -- wire FSM -------------------------------------------------------------

    def _reset_fsm(self) -> None:
        self._state = "idle"
        self._next_state = "idle"
        self._nclk = 0
        self._shift = 0
        self._pointer: Optional[int] = getattr(self, "_pointer", None)
        self._pending: Optional[bytearray] = None
        self._tx: bytes = b""
        self._tx_pos = 0
        self._master_ack = False

    def _commit(self) -> None:
        if self._pending and self._pointer is not None:
            reg = self.registers[self._pointer]
            reg[: len(self._pending)] = self._pending
        self._pending = None

    def on_start(self) -> None:
        self._commit()
        self._state = "addr"
        self._nclk = 0
        self._shift = 0
        self.sda_out = 1

    def on_stop(self) -> None:
        self._commit()
        self._state = "idle"
        self.sda_out = 1

    def on_rise(self, sda: int) -> None:
        st = self._state
        if st in ("idle", "ignore"):
            return
        self._nclk += 1
        if st == "tx":
            if self._nclk == 9:
                self._master_ack = sda == 0
        elif self._nclk <= 8:
            self._shift = ((self._shift << 1) | sda) & 0xFF

    def on_fall(self) -> None:
        st = self._state
        if st in ("idle", "ignore"):
            return
        n = self._nclk
        if st == "tx":
            if n < 8:
                self.sda_out = self._tx_bit(7 - n)
            elif n == 8:
                self.sda_out = 1
            elif n == 9:
                if self._master_ack:
                    self._tx_pos += 1
                    self._nclk = 0
                    self.sda_out = self._tx_bit(7)
                else:
                    self._state = "ignore"
                    self.sda_out = 1
            return
        if n == 8:
            acked = self._accept_byte(self._shift)
            self.sda_out = 0 if acked else 1
            if not acked:
                self._state = "ignore"
        elif n == 9:
            self.sda_out = 1
            self._nclk = 0
            self._shift = 0
            self._state = self._next_state
            if self._state == "tx":
                self.sda_out = self._tx_bit(7)

    def _accept_byte(self, byte: int) -> bool:
        st = self._state
        if st == "addr":
            if byte >> 1 != self.address:
                return False
            if byte & 1:
                if self._pointer not in self.registers:
                    return False
                self._next_state = "tx"
                self._tx = bytes(self.registers[self._pointer])
                self._tx_pos = 0
            else:
                self._next_state = "reg"
            return True
        if st == "reg":
            if byte not in self.registers:
                return False
            self._pointer = byte
            self._pending = bytearray()
            self._next_state = "wdata"
            return True
        if st == "wdata":
            assert self._pending is not None and self._pointer is not None
            if len(self._pending) >= len(self.registers[self._pointer]):
                return False
            self._pending.append(byte)
            self._next_state = "wdata"
            return True
        return False

    def _tx_bit(self, bit: int) -> int:
        if self._tx_pos >= len(self._tx):
            return 1
        return (self._tx[self._tx_pos] >> bit) & 1


def light_sensor(address: int = LIGHT_SENSOR_ADDRESS, brightness: int = 0) -> SensorDevice:
    """Light sensor: 1-byte config at 0x00, 16-bit brightness at 0x10."""
    return SensorDevice(
        address,
        {LIGHT_CONFIG_REG: b"\x00", LIGHT_DATA_REG: brightness.to_bytes(2, "big")},
        kind="light",
    )


def temperature_sensor(address: int = TEMP_SENSOR_ADDRESS, raw: int = 0) -> SensorDevice:
    """Temperature sensor: 16-bit reading at 0x00, 1-byte config at 0x01."""
    return SensorDevice(
        address,
        {TEMP_DATA_REG: raw.to_bytes(2, "big"), TEMP_CONFIG_REG: b"\x00"},
        kind="temperature",
    )


# ---------------------------------------------------------------------------
# Bus + monitor
# ---------------------------------------------------------------------------


class BusMonitor:
    """Decodes line changes into START/STOP/BIT/ACK/NACK events."""

    def __init__(self) -> None:
        self.events: list[I2cEvent] = []
        self._nbits = 0
        self._latched: Optional[tuple[int, int]] = None

    def observe(self, cycle: int, old: tuple[int, int], new: tuple[int, int], phase: int) -> None:
        (oscl, osda), (nscl, nsda) = old, new
        if oscl == 1 and nscl == 1 and osda != nsda:
            kind = EventKind.START if nsda == 0 else EventKind.STOP
            self.events.append(I2cEvent(kind, nsda, phase, cycle))
            self._nbits = 0
            self._latched = None
        elif oscl == 0 and nscl == 1:
            self._latched = (nsda, cycle)
        elif oscl == 1 and nscl == 0 and self._latched is not None:
            sda, at = self._latched
            self._latched = None
            self._nbits += 1
            if self._nbits == 9:
                kind = EventKind.ACK if sda == 0 else EventKind.NACK
                self._nbits = 0
            else:
                kind = EventKind.BIT
            self.events.append(I2cEvent(kind, sda, 2, at))


class I2cBus:
    def __init__(
        self,
        divider: ClockDividerConfig = ClockDividerConfig(),
        devices: Iterable[SensorDevice] = (),
    ) -> None:
        self.divider = divider
        self.devices: dict[int, SensorDevice] = {}
        for d in devices:
            self.attach(d)
        self.cycle = 0
        self.phase = 0
        self.scl = 1
        self.sda_m = 1
        self.sda = 1
        self.waveform: list[tuple[int, int, int]] = [(0, 1, 1)]
        self.monitor = BusMonitor()

    def attach(self, device: SensorDevice) -> None:
        if device.address in self.devices:
            raise ValueError(f"address {device.address:#04x} already on the bus")
        self.devices[device.address] = device

    @property
    def idle(self) -> bool:
        return self.scl == 1 and self.sda == 1

    def _line_sda(self) -> int:
        v = self.sda_m
        for d in self.devices.values():
            v &= d.sda_out
        return v

    def _record(self, scl: int, sda: int) -> None:
        old = (self.scl, self.sda)
        if old == (scl, sda):
            return
        self.scl, self.sda = scl, sda
        self.waveform.append((self.cycle, scl, sda))
        self.monitor.observe(self.cycle, old, (scl, sda), self.phase)
        oscl, osda = old
        if oscl == 1 and scl == 1:
            for d in self.devices.values():
                d.on_start() if sda == 0 else d.on_stop()
        elif oscl == 0 and scl == 1:
            for d in self.devices.values():
                d.on_rise(sda)
        elif oscl == 1 and scl == 0:
            for d in self.devices.values():
                d.on_fall()
        # slaves may have moved SDA in response
        line = self._line_sda()
        if line != self.sda:
            self._record(self.scl, line)

    def drive(self, scl: Optional[int] = None, sda: Optional[int] = None) -> None:
        if sda is not None:
            self.sda_m = sda
            self._record(self.scl, self._line_sda())
        if scl is not None:
            self._record(scl, self.sda)

    def quarter(self) -> None:
        self.cycle += self.divider.divisor
        self.phase = (self.phase + 1) % 4


# ---------------------------------------------------------------------------
# Master controller
# ---------------------------------------------------------------------------


class I2cController:
    """Single bus master issuing register writes and combined-format reads."""

    def __init__(self, bus: I2cBus) -> None:
        self.bus = bus
        self.valid_pulses = 0
        self.fault_at: Optional[tuple[int, int]] = None  # (byte index, bit index)
        self._byte_index = 0

    # -- wire slots ----------------------------------------------------------

    def _slot(self, q0_sda: int, q2_sda: Optional[int] = None) -> int:
        """One 4-quarter slot; returns SDA sampled during the high phase."""
        bus = self.bus
        bus.phase = 0
        bus.drive(sda=q0_sda)
        bus.quarter()
        bus.drive(scl=1)
        bus.quarter()
        sampled = bus.sda
        if q2_sda is not None:
            bus.drive(sda=q2_sda)
        bus.quarter()
        if q2_sda is None or q2_sda == 0:
            bus.drive(scl=0)
        bus.quarter()
        return sampled

    def _start(self) -> None:
        self._slot(1, 0)

    def _stop(self) -> None:
        self._slot(0, 1)

    def _write_bit(self, bit: int, glitch: bool = False) -> None:
        bus = self.bus
        bus.phase = 0
        bus.drive(sda=bit)
        bus.quarter()
        bus.drive(scl=1)
        bus.quarter()
        if glitch:
            bus.drive(sda=1 - bit)
            bus.drive(sda=bit)
        bus.quarter()
        bus.drive(scl=0)
        bus.quarter()

    def _write_byte(self, byte: int) -> bool:
        fault_bit = None
        if self.fault_at is not None and self.fault_at[0] == self._byte_index:
            fault_bit = self.fault_at[1]
        for i in range(7, -1, -1):
            self._write_bit((byte >> i) & 1, glitch=(7 - i) == fault_bit)
        self._byte_index += 1
        return self._slot(1) == 0  # release SDA, slave acks by pulling low

    def _read_byte(self, ack: bool) -> int:
        value = 0
        for _ in range(8):
            value = (value << 1) | self._slot(1)
        self._slot(0 if ack else 1)
        self._byte_index += 1
        return value

    def _begin(self) -> tuple[int, int]:
        if not self.bus.idle:
            raise BusBusy("bus is not idle")
        self._byte_index = 0
        return len(self.bus.monitor.events), len(self.bus.waveform)

    def _finish(self, txn: I2cTransaction, marks: tuple[int, int]) -> I2cTransaction:
        ev0, wf0 = marks
        # idle gap so back-to-back transactions keep bus-free time
        self.bus.quarter()
        self.bus.quarter()
        txn.events = self.bus.monitor.events[ev0:]
        txn.waveform = self.bus.waveform[max(wf0 - 1, 0):]
        return txn

    # -- transactions --------------------------------------------------------

    def master_write(self, dev_address: int, register: int, data: bytes) -> I2cTransaction:
        _check_addr(dev_address, register)
        marks = self._begin()
        txn = I2cTransaction(dev_address, Direction.WRITE, register, bytes(data))
        self._start()
        ok = self._write_byte(dev_address << 1) and self._write_byte(register)
        if ok:
            for b in data:
                if not self._write_byte(b):
                    ok = False
                    break
        self._stop()
        txn.acked = ok
        return self._finish(txn, marks)

    def master_read(self, dev_address: int, register: int, n: int) -> I2cTransaction:
        _check_addr(dev_address, register)
        if n < 1:
            raise ValueError("read length must be at least 1 byte")
        marks = self._begin()
        txn = I2cTransaction(dev_address, Direction.READ, register)
        self._start()
        ok = self._write_byte(dev_address << 1) and self._write_byte(register)
        if ok:
            self._start()  # repeated START
            ok = self._write_byte((dev_address << 1) | 1)
        payload = bytearray()
        if ok:
            for i in range(n):
                payload.append(self._read_byte(ack=i < n - 1))
        self._stop()
        txn.acked = ok
        if ok:
            txn.payload = bytes(payload)
            txn.data_valid = True
            self.valid_pulses += 1
        return self._finish(txn, marks)


def _check_addr(address: int, register: int) -> None:
    if not 0 <= address < 0x80:
        raise ValueError(f"7-bit address expected, got {address:#x}")
    if not 0 <= register < 0x100:
        raise ValueError(f"8-bit register expected, got {register:#x}")


def master_write(bus: I2cBus, dev_address: int, register: int, data: bytes) -> I2cTransaction:
    return I2cController(bus).master_write(dev_address, register, data)


def master_read(bus: I2cBus, dev_address: int, register: int, n: int) -> I2cTransaction:
    return I2cController(bus).master_read(dev_address, register, n)


# ---------------------------------------------------------------------------
# Trace decoding and checking
# ---------------------------------------------------------------------------


@dataclass
class DecodedSegment:
    """Bytes between one START and the next START/STOP."""

    address: int
    read: bool
    data: list[int]
    acks: list[bool]  # one per byte, address byte first


def decode_events(events: Sequence[I2cEvent]) -> list[DecodedSegment]:
    segments: list[DecodedSegment] = []
    bits: list[int] = []
    cur: Optional[DecodedSegment] = None
    for ev in events:
        if ev.kind in (EventKind.START, EventKind.STOP):
            cur = None
            bits = []
            if ev.kind is EventKind.START:
                cur = DecodedSegment(-1, False, [], [])
                segments.append(cur)
        elif ev.kind is EventKind.BIT:
            bits.append(ev.sda)
        else:
            if cur is None or len(bits) != 8:
                raise ProtocolViolation(f"byte frame with {len(bits)} bits at cycle {ev.cycle}")
            value = int("".join(map(str, bits)), 2)
            bits = []
            if cur.address < 0:
                cur.address, cur.read = value >> 1, bool(value & 1)
            else:
                cur.data.append(value)
            cur.acks.append(ev.kind is EventKind.ACK)
    return segments


def parse_transaction(events: Sequence[I2cEvent]) -> tuple[int, Direction, int, bytes]:
    """Recover ``(address, direction, register, payload)`` from a trace."""
    segs = decode_events(events)
    if not segs:
        raise ProtocolViolation("no START in trace")
    first = segs[0]
    if first.read or not first.data:
        raise ProtocolViolation("first segment must be a register write")
    register = first.data[0]
    if len(segs) > 1 and segs[1].read:
        return segs[1].address, Direction.READ, register, bytes(segs[1].data)
    return first.address, Direction.WRITE, register, bytes(first.data[1:])


def check_trace(
    events: Sequence[I2cEvent], waveform: Sequence[tuple[int, int, int]] = ()
) -> list[str]:
    """Return every framing violation found; empty means the trace is clean."""
    errors: list[str] = []
    if not events:
        return ["empty trace"]
    if events[0].kind is not EventKind.START:
        errors.append("trace does not begin with START")
    if events[-1].kind is not EventKind.STOP:
        errors.append("trace does not end with STOP")
    in_txn = False
    nbits = 0
    frames_since_start = 0
    for ev in events:
        k = ev.kind
        if k is EventKind.START:
            if nbits:
                errors.append(f"START inside a byte frame at cycle {ev.cycle}")
            in_txn = True
            nbits = 0
            frames_since_start = 0
        elif k is EventKind.STOP:
            if not in_txn:
                errors.append(f"STOP without START at cycle {ev.cycle}")
            if nbits:
                errors.append(f"STOP inside a byte frame at cycle {ev.cycle}")
            elif frames_since_start == 0:
                errors.append(f"STOP with no address byte at cycle {ev.cycle}")
            in_txn = False
            nbits = 0
        else:
            if not in_txn:
                errors.append(f"{k.value} outside a transaction at cycle {ev.cycle}")
            if k is EventKind.BIT:
                nbits += 1
                if nbits > 8:
                    errors.append(f"byte frame longer than 8 bits at cycle {ev.cycle}")
            else:
                if nbits != 8:
                    errors.append(f"{k.value} after {nbits} bits at cycle {ev.cycle}")
                nbits = 0
                frames_since_start += 1
    # SDA may move under SCL high only as a START/STOP the monitor recorded
    cond_cycles = {ev.cycle for ev in events if ev.kind in (EventKind.START, EventKind.STOP)}
    for (c0, scl0, sda0), (c1, scl1, sda1) in zip(waveform, waveform[1:]):
        if scl0 != scl1 and sda0 != sda1:
            errors.append(f"SCL and SDA changed together at cycle {c1}")
        elif scl0 == 1 and scl1 == 1 and sda0 != sda1 and c1 not in cond_cycles:
            errors.append(f"SDA changed under SCL high at cycle {c1}")
    return errors


def assert_protocol(events: Sequence[I2cEvent], waveform=()) -> None:
    errors = check_trace(events, waveform)
    if errors:
        raise ProtocolViolation("; ".join(errors))


def address_bits(address: int, read: bool = False) -> list[int]:
    byte = (address << 1) | int(read)
    return [(byte >> i) & 1 for i in range(7, -1, -1)]


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def format_trace_csv(events: Sequence[I2cEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cycle", "kind", "sda"])
    for ev in events:
        w.writerow([ev.cycle, ev.kind.value, ev.sda])
    return buf.getvalue()


def parse_trace_csv(text: str) -> list[I2cEvent]:
    rows = csv.DictReader(io.StringIO(text))
    return [I2cEvent(EventKind(r["kind"]), int(r["sda"]), 2, int(r["cycle"])) for r in rows]


def parse_preload(lines: Iterable[str]) -> list[tuple[int, int, bytes]]:
    """Parse ``address,register,hex_bytes`` lines (``#`` comments allowed)."""
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            a, r, h = (p.strip() for p in line.split(","))
            address, register, value = int(a, 0), int(r, 0), bytes.fromhex(h)
        except ValueError as exc:
            raise ValueError(f"preload line {lineno}: {raw.rstrip()!r}") from exc
        if not 0 <= address < 0x80 or not 0 <= register < 0x100 or not value:
            raise ValueError(f"preload line {lineno}: {raw.rstrip()!r}")
        out.append((address, register, value))
    return out


def load_preload(path: str | Path) -> list[tuple[int, int, bytes]]:
    with open(path) as fh:
        return parse_preload(fh)


def apply_preload(bus: I2cBus, entries: Iterable[tuple[int, int, bytes]]) -> None:
    for address, register, value in entries:
        dev = bus.devices.get(address)
        if dev is None:
            dev = SensorDevice(address, {})
            bus.attach(dev)
        dev.set_register(register, value)


def default_bus(divider: ClockDividerConfig = ClockDividerConfig()) -> I2cBus:
    return I2cBus(divider, [light_sensor(), temperature_sensor()])
