"""``lanepipe`` command line.

Exit codes: 0 success, 1 I/O error, 2 validation error, 3 protocol violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import control_units as cu
from . import i2c_core as i2c
from .filters import SobelConfig
from .imageio import ImageFormatError, read_image, write_pnm
from .lane_decision import DecisionConfig
from .pipeline import DEFAULT_CLOCK_HZ, simulate
from .refmodel import compare_stages
from .rgb2gray import GrayWeights
from .stream_core import ConfigurationError, FrameGeometry, load_stall_schedule
from .synth import make_rng, random_boundaries, road_image

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_PROTOCOL = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _int(text: str) -> int:
    return int(text, 0)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def _decision_config(args, geometry: FrameGeometry) -> DecisionConfig:
    overrides = {}
    for flag, key in (
        ("band_top", "band_top_row"),
        ("band_bottom", "band_bottom_row"),
        ("hit_fraction", "column_hit_fraction"),
        ("merge_gap", "merge_gap"),
        ("center_column", "center_column"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    cfg = DecisionConfig.for_geometry(geometry, **overrides)
    cfg.validate(geometry)
    return cfg


def cmd_pipeline(args) -> int:
    try:
        geometry = FrameGeometry.parse(args.geometry)
        weights = GrayWeights.parse(args.gray_weights)
        sobel = SobelConfig(args.sobel_threshold)
        decision = _decision_config(args, geometry)
        if args.clock_hz <= 0:
            raise ConfigurationError("--clock-hz must be positive")
    except ConfigurationError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc

    try:
        image = read_image(args.image)
        schedule = load_stall_schedule(args.stall_file) if args.stall_file else None
    except (OSError, ImageFormatError) as exc:
        raise CliError(EXIT_IO, f"cannot read input: {exc}") from exc
    except ConfigurationError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc

    h, w = image.shape[:2]
    if (w, h) != (geometry.width, geometry.height):
        raise CliError(
            EXIT_VALIDATION,
            f"image is {w}x{h} but geometry is {geometry}; pass --geometry {w}x{h}",
        )

    capture = set(args.dump_stage or ())
    if args.compare:
        capture |= {"gray", "avg"}
    result = simulate(
        image,
        geometry,
        sobel,
        weights,
        decision,
        stall_schedule=schedule,
        capture=tuple(capture),
        record_magnitudes=args.compare,
        record_windows=bool(args.dump_windows),
    )

    report = {
        "lane_report": result.reports[0].to_dict(),
        "cycle_stats": result.stats.to_dict(),
        "frame_time_ms": result.frame_time_ms(args.clock_hz),
        "stage_latencies": result.stage_latencies,
        "per_stage_latency": result.stage_latency,
        "decision_latency": result.decision_latency[0],
        "clock_hz": args.clock_hz,
        "geometry": str(geometry),
    }
    if args.compare:
        streamed = {
            "gray": result.stage_frames["gray"][0],
            "avg": result.stage_frames["avg"][0],
            "sobel_magnitude": result.magnitudes[0],
        }
        report["compare"] = compare_stages(image, streamed)

    try:
        dump_dir = Path(args.dump_dir)
        for name in args.dump_stage or ():
            frame = result.binary_frames[0] if name == "sobel" else result.stage_frames[name][0]
            write_pnm(dump_dir / f"{name}.pgm", frame)
        if args.dump_windows:
            with open(args.dump_windows, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["row", "col"] + [f"t{i}" for i in range(9)])
                for win in result.windows or ():
                    wr.writerow([*win.center, *win.taps])
        _emit(json.dumps(report, indent=2) + "\n", args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write output: {exc}") from exc
    return EXIT_OK


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


def cmd_scenario(args) -> int:
    traces = []
    for path in (args.lux_trace, args.temp_trace):
        try:
            traces.append(cu.load_sensor_trace(path))
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
        except cu.TraceFormatError as exc:
            raise CliError(EXIT_IO, f"{path}: {exc}") from exc
        if not traces[-1]:
            raise CliError(EXIT_IO, f"{path}: no samples")
    try:
        light_cfg = cu.LightConfig(args.light_threshold)
        tcu_cfg = cu.TcuConfig(noise_threshold_c=args.noise_threshold)
        if args.poll_ms <= 0:
            raise ValueError("--poll-ms must be positive")
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    divider = i2c.ClockDividerConfig(args.clock_hz, args.scl_hz)
    rows = cu.run_scenario(traces[0], traces[1], args.poll_ms, light_cfg, tcu_cfg,
                           i2c.default_bus(divider))
    try:
        _emit(cu.format_log_csv(rows), args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write output: {exc}") from exc
    return EXIT_OK


# ---------------------------------------------------------------------------
# trace
# ---------------------------------------------------------------------------


def cmd_trace(args) -> int:
    try:
        divider = i2c.ClockDividerConfig(args.clock_hz, args.scl_hz)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    bus = i2c.default_bus(divider)
    if args.preload:
        try:
            i2c.apply_preload(bus, i2c.load_preload(args.preload))
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {args.preload}: {exc}") from exc
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION, str(exc)) from exc

    write_data: Optional[bytes] = None
    if args.write is not None:
        try:
            write_data = bytes.fromhex(args.write)
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION, f"--write expects hex bytes: {exc}") from exc
    read_n = args.read
    if write_data is None and read_n is None:
        read_n = 2
    if read_n is not None and read_n < 1:
        raise CliError(EXIT_VALIDATION, "--read needs at least 1 byte")

    ctrl = i2c.I2cController(bus)
    if args.inject_fault:
        ctrl.fault_at = (1, 3)  # register byte, fourth bit
    txns = []
    try:
        if write_data is not None:
            txns.append(ctrl.master_write(args.address, args.register, write_data))
            ctrl.fault_at = None
        if read_n is not None:
            txns.append(ctrl.master_read(args.address, args.register, read_n))
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc

    events = [ev for t in txns for ev in t.events]
    try:
        _emit(i2c.format_trace_csv(events), args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write output: {exc}") from exc

    problems = []
    for t in txns:
        problems += i2c.check_trace(t.events, t.waveform)
    if problems:
        raise CliError(EXIT_PROTOCOL, "protocol violation: " + "; ".join(problems))
    if write_data is not None and read_n is not None:
        w, r = txns
        if w.acked and r.data_valid and r.payload[: len(write_data)] != write_data:
            raise CliError(
                EXIT_PROTOCOL,
                f"loopback mismatch: wrote {write_data.hex()}, read {r.payload.hex()}",
            )
    for t in txns:
        status = "acked" if t.acked else "NACKed"
        print(
            f"{t.direction.value} addr={t.address:#04x} reg={t.register:#04x} "
            f"payload={t.payload.hex() or '-'} {status}",
            file=sys.stderr,
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    try:
        geometry = FrameGeometry.parse(args.geometry)
    except ConfigurationError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    rng = make_rng(args.seed)
    try:
        if args.boundaries:
            bounds = [int(b) for b in args.boundaries.split(",")]
        else:
            bounds = random_boundaries(rng, geometry.width, args.count)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    img = road_image(geometry, bounds)
    try:
        write_pnm(args.output, img)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.output}: {exc}") from exc
    print(json.dumps({"boundaries": bounds, "geometry": str(geometry)}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lanepipe",
        description="Cycle-accurate lane-detection datapath and I2C control-unit simulator.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("pipeline", help="run an image through the streaming datapath")
    pp.add_argument("image", help="input PPM (P6), PGM (P5) or PNG")
    pp.add_argument("--geometry", default="416x416", help="frame size WxH (default 416x416)")
    pp.add_argument("--clock-hz", type=int, default=DEFAULT_CLOCK_HZ)
    pp.add_argument("--sobel-threshold", type=int, default=100)
    pp.add_argument("--gray-weights", default="77,150,29", help="R,G,B weights summing to 256")
    pp.add_argument("--band-top", type=int)
    pp.add_argument("--band-bottom", type=int)
    pp.add_argument("--hit-fraction", type=float)
    pp.add_argument("--merge-gap", type=int)
    pp.add_argument("--center-column", type=int)
    pp.add_argument("--stall-file", help="sink stall schedule, lines of cycle,ready_bit")
    pp.add_argument("--out", help="write the run report JSON here instead of stdout")
    pp.add_argument("--dump-stage", action="append", choices=("gray", "avg", "sobel"),
                    help="write that stage's output frame as <name>.pgm (repeatable)")
    pp.add_argument("--dump-dir", default=".", help="directory for --dump-stage files")
    pp.add_argument("--dump-windows", metavar="CSV",
                    help="write every averaging window as row,col,t0..t8")
    pp.add_argument("--compare", action="store_true",
                    help="add per-stage max/mean deviation from the float reference")
    pp.set_defaults(func=cmd_pipeline)

    ps = sub.add_parser("scenario", help="poll simulated sensors and log control commands")
    ps.add_argument("lux_trace", help="CSV time_ms,raw_value (16-bit brightness)")
    ps.add_argument("temp_trace", help="CSV time_ms,raw_value (16-bit temperature register)")
    ps.add_argument("--poll-ms", type=float, default=100.0)
    ps.add_argument("--light-threshold", type=int, default=2000)
    ps.add_argument("--noise-threshold", type=float, default=0.5, help="TCU deadband in C")
    ps.add_argument("--clock-hz", type=int, default=DEFAULT_CLOCK_HZ)
    ps.add_argument("--scl-hz", type=int, default=100_000)
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_scenario)

    pt = sub.add_parser("trace", help="emit the wire-level event trace of one transaction")
    pt.add_argument("--address", type=_int, default=i2c.TEMP_SENSOR_ADDRESS)
    pt.add_argument("--register", type=_int, default=i2c.TEMP_DATA_REG)
    pt.add_argument("--read", type=int, metavar="N", help="read N bytes (default 2)")
    pt.add_argument("--write", metavar="HEX", help="write these bytes first")
    pt.add_argument("--preload", help="device register preload: address,register,hex_bytes")
    pt.add_argument("--clock-hz", type=int, default=DEFAULT_CLOCK_HZ)
    pt.add_argument("--scl-hz", type=int, default=100_000)
    pt.add_argument("--inject-fault", action="store_true",
                    help="glitch SDA while SCL is high during the register byte")
    pt.add_argument("--out")
    pt.set_defaults(func=cmd_trace)

    py = sub.add_parser("synth", help="write a synthetic road image with painted boundaries")
    py.add_argument("output")
    py.add_argument("--geometry", default="416x416")
    py.add_argument("--boundaries", help="comma-separated stripe columns")
    py.add_argument("--count", type=int, default=3, help="random boundary count")
    py.add_argument("--seed", type=int, help="overrides $LANEPIPE_SEED")
    py.set_defaults(func=cmd_synth)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"lanepipe: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
