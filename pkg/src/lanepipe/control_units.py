"""Light and temperature control units fed by I2C sensor readings."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .i2c_core import (
    LIGHT_CONFIG_REG,
    LIGHT_DATA_REG,
    LIGHT_SENSOR_ADDRESS,
    TEMP_DATA_REG,
    TEMP_SENSOR_ADDRESS,
    I2cBus,
    I2cController,
    default_bus,
)

DAC_MAX = 4095
REFERENCE_C = 25.0


@dataclass(frozen=True)
class LightConfig:
    threshold_12bit: int = 2000

    def __post_init__(self) -> None:
        if not 0 <= self.threshold_12bit <= DAC_MAX:
            raise ValueError(f"light threshold {self.threshold_12bit} outside [0, 4095]")


@dataclass(frozen=True)
class TcuConfig:
    reference_c: float = REFERENCE_C
    noise_threshold_c: float = 0.5
    resolution_c_per_lsb: float = 0.0625
    full_scale_deviation_c: float = 25.0

    def __post_init__(self) -> None:
        if self.reference_c != REFERENCE_C:
            raise ValueError("the reference temperature is fixed at 25 C")
        if self.noise_threshold_c < 0:
            raise ValueError("noise_threshold_c must be >= 0")
        if self.resolution_c_per_lsb <= 0 or self.full_scale_deviation_c <= 0:
            raise ValueError("resolution and full-scale deviation must be positive")


@dataclass(frozen=True)
class ControlCommand:
    enable: bool = False
    dac_code: int = 0
    mode: str = "off"  # off | light_on | cool | heat

    def __post_init__(self) -> None:
        if not 0 <= self.dac_code <= DAC_MAX:
            raise ValueError(f"dac_code {self.dac_code} outside 12-bit range")
        if not self.enable and self.dac_code:
            raise ValueError("a disabled command must carry dac_code 0")


OFF = ControlCommand()


def scale_brightness(raw: int) -> int:
    """16-bit reading to 12-bit DAC range."""
    return (raw & 0xFFFF) >> 4


def light_decision(scaled: int, cfg: LightConfig = LightConfig()) -> ControlCommand:
    if scaled < cfg.threshold_12bit:
        return ControlCommand(True, cfg.threshold_12bit - scaled, "light_on")
    return OFF


def temp_celsius(msb: int, lsb: int, cfg: TcuConfig = TcuConfig()) -> float:
    raw = (((msb & 0xFF) << 8) | (lsb & 0xFF)) >> 4
    if raw & 0x800:
        raw -= 0x1000
    return raw * cfg.resolution_c_per_lsb


def encode_temperature(temp_c: float, cfg: TcuConfig = TcuConfig()) -> bytes:
    """Inverse of :func:`temp_celsius`: left-justified 12-bit two's complement."""
    counts = math.floor(temp_c / cfg.resolution_c_per_lsb + 0.5)
    if not -2048 <= counts <= 2047:
        raise ValueError(f"{temp_c} C not representable")
    return ((counts & 0xFFF) << 4).to_bytes(2, "big")


def tcu_step(temp_c: float, cfg: TcuConfig = TcuConfig()) -> ControlCommand:
    deviation = abs(temp_c - cfg.reference_c)
    if deviation <= cfg.noise_threshold_c:
        return OFF
    effort = Fraction(deviation) * DAC_MAX / Fraction(cfg.full_scale_deviation_c)
    code = min(DAC_MAX, math.floor(effort + Fraction(1, 2)))
    return ControlCommand(True, code, "cool" if temp_c > cfg.reference_c else "heat")


# ---------------------------------------------------------------------------
# Polling units
# ---------------------------------------------------------------------------


@dataclass
class Reading:
    raw: int
    converted: float
    command: ControlCommand


class LightControlUnit:
    """Initialises the sensor once, then polls brightness and drives the lamp DAC."""

    def __init__(
        self,
        bus: I2cBus,
        cfg: LightConfig = LightConfig(),
        address: int = LIGHT_SENSOR_ADDRESS,
        controller: Optional[I2cController] = None,
    ) -> None:
        self.ctrl = controller or I2cController(bus)
        self.cfg = cfg
        self.address = address
        self.initialized = False

    def initialize(self) -> bool:
        txn = self.ctrl.master_write(self.address, LIGHT_CONFIG_REG, b"\x01")
        self.initialized = txn.acked
        return txn.acked

    def poll(self) -> Optional[Reading]:
        if not self.initialized and not self.initialize():
            return None
        txn = self.ctrl.master_read(self.address, LIGHT_DATA_REG, 2)
        if not txn.data_valid:
            return None
        raw = int.from_bytes(txn.payload, "big")
        scaled = scale_brightness(raw)
        return Reading(raw, scaled, light_decision(scaled, self.cfg))


class TemperatureControlUnit:
    def __init__(
        self,
        bus: I2cBus,
        cfg: TcuConfig = TcuConfig(),
        address: int = TEMP_SENSOR_ADDRESS,
        controller: Optional[I2cController] = None,
    ) -> None:
        self.ctrl = controller or I2cController(bus)
        self.cfg = cfg
        self.address = address

    def poll(self) -> Optional[Reading]:
        txn = self.ctrl.master_read(self.address, TEMP_DATA_REG, 2)
        if not txn.data_valid:
            return None
        msb, lsb = txn.payload
        temp = temp_celsius(msb, lsb, self.cfg)
        return Reading((msb << 8) | lsb, temp, tcu_step(temp, self.cfg))


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


class TraceFormatError(ValueError):
    def __init__(self, lineno: int, line: str) -> None:
        super().__init__(f"line {lineno}: cannot parse {line!r} as time_ms,raw_value")
        self.lineno = lineno


def parse_sensor_trace(lines: Iterable[str]) -> list[tuple[float, int]]:
    """``time_ms,raw_value`` rows; a non-numeric first row is taken as a header."""
    out: list[tuple[float, int]] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            if len(parts) != 2:
                raise ValueError
            t = float(parts[0])
            v = int(parts[1], 16) if parts[1].lower().startswith("0x") else int(parts[1])
            if t < 0 or not 0 <= v <= 0xFFFF:
                raise ValueError
        except ValueError:
            if lineno == 1 and parts[0].lower().startswith("time"):
                continue
            raise TraceFormatError(lineno, line) from None
        out.append((t, v))
    out.sort(key=lambda tv: tv[0])
    return out


def load_sensor_trace(path: str | Path) -> list[tuple[float, int]]:
    with open(path) as fh:
        return parse_sensor_trace(fh)


def _hold(trace: list[tuple[float, int]], t: float) -> int:
    value = trace[0][1]
    for ts, v in trace:
        if ts > t:
            break
        value = v
    return value


@dataclass
class LogRow:
    time_ms: float
    unit: str
    raw: int
    converted: float
    command: ControlCommand


def run_scenario(
    lux_trace: list[tuple[float, int]],
    temp_trace: list[tuple[float, int]],
    poll_ms: float = 100.0,
    light_cfg: LightConfig = LightConfig(),
    tcu_cfg: TcuConfig = TcuConfig(),
    bus: Optional[I2cBus] = None,
) -> list[LogRow]:
    """Replay sensor traces into simulated devices and poll both units over I2C."""
    if poll_ms <= 0:
        raise ValueError("poll_ms must be positive")
    if not lux_trace or not temp_trace:
        raise ValueError("both traces need at least one sample")
    bus = bus or default_bus()
    ctrl = I2cController(bus)
    light = LightControlUnit(bus, light_cfg, controller=ctrl)
    tcu = TemperatureControlUnit(bus, tcu_cfg, controller=ctrl)
    light_dev = bus.devices[light.address]
    temp_dev = bus.devices[tcu.address]
    end = max(lux_trace[-1][0], temp_trace[-1][0])
    rows: list[LogRow] = []
    step = 0
    while step * poll_ms <= end:
        t = step * poll_ms
        light_dev.set_register(LIGHT_DATA_REG, _hold(lux_trace, t).to_bytes(2, "big"))
        temp_dev.set_register(TEMP_DATA_REG, _hold(temp_trace, t).to_bytes(2, "big"))
        for unit, ctl in (("light", light), ("temp", tcu)):
            r = ctl.poll()
            if r is None:
                rows.append(LogRow(t, unit, -1, float("nan"), OFF))
            else:
                rows.append(LogRow(t, unit, r.raw, r.converted, r.command))
        step += 1
    return rows


def format_log_csv(rows: Iterable[LogRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_ms", "unit", "raw", "converted", "enable", "mode", "dac_code"])
    for r in rows:
        if r.raw < 0:
            conv = "nan"
        elif r.unit == "temp":
            conv = f"{r.converted:g}"
        else:
            conv = str(int(r.converted))
        w.writerow([f"{r.time_ms:g}", r.unit, r.raw, conv, int(r.command.enable),
                    r.command.mode, r.command.dac_code])
    return buf.getvalue()
