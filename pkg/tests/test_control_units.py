import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanepipe.control_units import (
    DAC_MAX,
    OFF,
    ControlCommand,
    LightConfig,
    LightControlUnit,
    TcuConfig,
    TemperatureControlUnit,
    TraceFormatError,
    encode_temperature,
    format_log_csv,
    light_decision,
    parse_sensor_trace,
    run_scenario,
    scale_brightness,
    tcu_step,
    temp_celsius,
)
from lanepipe.i2c_core import (
    LIGHT_CONFIG_REG,
    LIGHT_DATA_REG,
    TEMP_DATA_REG,
    ClockDividerConfig,
    default_bus,
)


def test_scale_examples():
    assert scale_brightness(0) == 0
    assert scale_brightness(65535) == 4095
    assert scale_brightness(4096) == 256


def test_scale_is_monotone_and_surjective():
    out = [scale_brightness(r) for r in range(65536)]
    assert all(a <= b for a, b in zip(out, out[1:]))
    assert set(out) == set(range(4096))


def test_light_examples():
    assert light_decision(100, LightConfig(2000)) == ControlCommand(True, 1900, "light_on")
    assert light_decision(2000, LightConfig(2000)) == OFF
    assert light_decision(1999, LightConfig(2000)) == ControlCommand(True, 1, "light_on")
    assert light_decision(0, LightConfig(4095)) == ControlCommand(True, 4095, "light_on")


def test_temperature_examples():
    assert temp_celsius(0x19, 0x00) == 25.0
    assert temp_celsius(0x00, 0x00) == 0.0
    assert temp_celsius(0xE7, 0x00) == -25.0
    assert temp_celsius(0x7F, 0xF0) == 127.9375
    assert temp_celsius(0x80, 0x00) == -128.0


def test_tcu_examples():
    assert tcu_step(25.0) == OFF
    assert tcu_step(30.25) == ControlCommand(True, 860, "cool")
    assert tcu_step(0.0) == ControlCommand(True, 4095, "heat")
    assert tcu_step(-40.0).dac_code == DAC_MAX
    assert tcu_step(25.5) == OFF  # deadband edge is inclusive
    assert tcu_step(24.4375).mode == "heat"


def test_tcu_monotone_over_sweep():
    temps = np.linspace(-30.0, 80.0, 1000)
    pairs = sorted((abs(t - 25.0), tcu_step(float(t)).dac_code) for t in temps)
    codes = [c for _, c in pairs]
    assert all(a <= b for a, b in zip(codes, codes[1:]))
    for dev, code in pairs:
        if dev <= 0.5:
            assert code == 0


@given(st.floats(-100, 150, allow_nan=False))
def test_tcu_mode_correctness(t):
    cmd = tcu_step(t)
    if t > 25.5:
        assert cmd.mode == "cool" and cmd.enable
    elif t < 24.5:
        assert cmd.mode == "heat" and cmd.enable
    else:
        assert cmd == OFF
    assert 0 <= cmd.dac_code <= DAC_MAX


@given(st.integers(-2048, 2047))
def test_encode_round_trip(counts):
    t = counts * 0.0625
    msb, lsb = encode_temperature(t)
    assert temp_celsius(msb, lsb) == t
    assert lsb & 0x0F == 0


def test_command_invariants():
    with pytest.raises(ValueError):
        ControlCommand(False, 5, "off")
    with pytest.raises(ValueError):
        ControlCommand(True, 4096, "cool")
    with pytest.raises(ValueError):
        LightConfig(5000)
    with pytest.raises(ValueError):
        TcuConfig(reference_c=20.0)
    with pytest.raises(ValueError):
        TcuConfig(noise_threshold_c=-1)
    with pytest.raises(ValueError):
        encode_temperature(200.0)


def test_light_unit_initialises_then_polls():
    bus = default_bus()
    bus.devices[0x23].set_register(LIGHT_DATA_REG, (1600).to_bytes(2, "big"))
    unit = LightControlUnit(bus)
    r = unit.poll()
    assert unit.initialized
    assert bus.devices[0x23].read_register(LIGHT_CONFIG_REG) == b"\x01"
    assert (r.raw, r.converted) == (1600, 100)
    assert r.command == ControlCommand(True, 1900, "light_on")


def test_units_report_missing_devices():
    bus = default_bus()
    assert LightControlUnit(bus, address=0x60).poll() is None
    assert TemperatureControlUnit(bus, address=0x61).poll() is None


def test_end_to_end_composition():
    rng = np.random.default_rng(21)
    bus = default_bus(ClockDividerConfig(150_000_000, 1_000_000))
    unit = TemperatureControlUnit(bus)
    dev = bus.devices[0x48]
    for _ in range(500):
        counts = int(rng.integers(-2048, 2048))
        data = encode_temperature(counts * 0.0625)
        dev.set_register(TEMP_DATA_REG, data)
        r = unit.poll()
        assert r.command == tcu_step(temp_celsius(*data))
        assert r.converted == counts * 0.0625


def test_parse_sensor_trace():
    rows = parse_sensor_trace(["time_ms,raw_value", "100,0x0200", "0,16", "", "# x"])
    assert rows == [(0.0, 16), (100.0, 0x200)]
    for bad, line in ((["0,1", "oops"], 2), (["0,70000"], 1), (["1,2,3"], 1)):
        with pytest.raises(TraceFormatError) as exc:
            parse_sensor_trace(bad)
        assert exc.value.lineno == line


def test_scenario_temperature_step():
    lux = [(0.0, 0xFFFF)]
    temp = [(0.0, 0x1900), (100.0, int.from_bytes(encode_temperature(30.25), "big"))]
    rows = run_scenario(lux, temp, poll_ms=50)
    t_rows = [r for r in rows if r.unit == "temp"]
    assert [r.time_ms for r in t_rows] == [0, 50, 100]
    assert [r.command.dac_code for r in t_rows] == [0, 0, 860]
    assert t_rows[-1].command.mode == "cool"
    light = [r for r in rows if r.unit == "light"]
    assert all(r.command == OFF and r.converted == 4095 for r in light)
    text = format_log_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "time_ms,unit,raw,converted,enable,mode,dac_code"
    assert lines[-1] == "100,temp,7744,30.25,1,cool,860"
    assert lines[1] == "0,light,65535,4095,0,off,0"


def test_scenario_rejects_bad_arguments():
    with pytest.raises(ValueError):
        run_scenario([(0, 1)], [(0, 1)], poll_ms=0)
    with pytest.raises(ValueError):
        run_scenario([], [(0, 1)])
    assert not math.isnan(run_scenario([(0, 1)], [(0, 1)])[1].converted)
