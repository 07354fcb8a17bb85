"""Command-line toolkit: simulate, calibrate, track, evaluate, bench.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from . import io as slio
from .detect import Calibration, CalibrationError, calibrate
from .geometry import RigConfig, WorldPosition
from .pipeline import (PositionEstimate, SmootherConfig, evaluate,
                       track_frame, track_stream)
from .stream import PositionStreamer
from .synth import SceneState, render

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _load_config(path: str) -> slio.RunConfig:
    try:
        return slio.load_config(path)
    except FileNotFoundError:
        raise slio.ConfigError(f"config file not found: {path}") from None


def write_calibration(cal: Calibration, path: str) -> None:
    Path(path).write_text(f"v_b={cal.v_b}\n", encoding="utf-8")


def read_calibration(path: str, rig: RigConfig) -> Calibration:
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text.startswith("v_b="):
        raise slio.ConfigError(f"calibration file {path}: expected 'v_b=<int>'")
    try:
        v_b = int(text[len("v_b="):])
    except ValueError:
        raise slio.ConfigError(f"calibration file {path}: bad v_b value") from None
    try:
        return Calibration(v_b=v_b, width=rig.width, height=rig.height)
    except ValueError as exc:
        raise slio.ConfigError(f"calibration file {path}: {exc}") from None


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    states = cfg.trajectory.materialize(cfg.rig)
    for i, state in enumerate(states):
        frame = render(cfg.rig, state, cfg.noise, cfg.intensity, index=i)
        slio.write_pgm(frame, str(out_dir / f"{i:06d}.pgm"))
    slio.write_truth_csv(states, str(out_dir / "truth.csv"))
    print(f"wrote {len(states)} frames + truth.csv to {out_dir}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    frame = slio.read_pgm(args.empty_frame)
    if (frame.width, frame.height) != (cfg.rig.width, cfg.rig.height):
        raise slio.ConfigError(
            f"frame is {frame.width}x{frame.height}, rig expects "
            f"{cfg.rig.width}x{cfg.rig.height}"
        )
    cal = calibrate(frame)
    if args.out:
        write_calibration(cal, args.out)
    print(f"v_b={cal.v_b}")
    return 0


def _sorted_frame_paths(frames_dir: str) -> list[Path]:
    paths = sorted(Path(frames_dir).glob("*.pgm"))
    if not paths:
        raise slio.ConfigError(f"no .pgm frames in {frames_dir}")
    return paths


def cmd_track(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    cal = read_calibration(args.calibration, cfg.rig)
    rate = cfg.trajectory.rate_hz
    frames = []
    for i, path in enumerate(_sorted_frame_paths(args.frames_dir)):
        frame = slio.read_pgm(str(path))
        frame.index = i
        frame.timestamp_ms = round(i * 1000.0 / rate)
        frames.append(frame)

    smoother = cfg.smoother
    if args.smooth:
        smoother = SmootherConfig(alpha=cfg.smoother.alpha, enabled=True)

    streamer = PositionStreamer(args.stream) if args.stream else None
    try:
        estimates = track_stream(
            frames, cfg.rig, cal, cfg.detect, smoother,
            on_estimate=streamer.submit if streamer else None,
        )
    finally:
        if streamer:
            streamer.close()
            print(f"streamed {streamer.sent} packets to {args.stream} "
                  f"({streamer.dropped} dropped, {streamer.send_failures} failed)")
    slio.write_estimates_csv(estimates, args.out_csv)
    detected = sum(1 for e in estimates if e.pos is not None)
    print(f"tracked {len(estimates)} frames, {detected} with a position "
          f"-> {args.out_csv}")
    return 0


def _fmt(value: float) -> str:
    return "n/a" if math.isnan(value) else f"{value:.3f}"


def cmd_evaluate(args: argparse.Namespace) -> int:
    rows = slio.read_estimates_csv(args.estimates_csv)
    truth = slio.read_truth_csv(args.truth_csv)
    if len(rows) != len(truth):
        raise slio.ConfigError(
            f"length mismatch: {len(rows)} estimates vs {len(truth)} truth rows"
        )
    estimates = [
        PositionEstimate(
            frame_index=r.frame, timestamp_ms=r.timestamp_ms,
            pos=WorldPosition(r.x_cm, r.z_cm) if r.detected else None,
        )
        for r in rows
    ]
    metrics = evaluate(estimates, truth)
    report = {
        "frames": len(rows),
        "detection_rate": metrics.detection_rate,
        "rms_error_cm": metrics.rms_error,
        "max_error_cm": metrics.max_error,
        "p95_error_cm": metrics.p95_error,
        "within_10cm_fraction": metrics.within_10cm_fraction,
    }
    print(f"frames:            {report['frames']}")
    print(f"detection rate:    {metrics.detection_rate:.3f}")
    print(f"rms error (cm):    {_fmt(metrics.rms_error)}")
    print(f"max error (cm):    {_fmt(metrics.max_error)}")
    print(f"p95 error (cm):    {_fmt(metrics.p95_error)}")
    print(f"within 10 cm:      {_fmt(metrics.within_10cm_fraction)}")
    if args.json:
        clean = {k: (None if isinstance(v, float) and math.isnan(v) else v)
                 for k, v in report.items()}
        Path(args.json).write_text(json.dumps(clean, indent=2) + "\n",
                                   encoding="utf-8")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    if args.frames < 1:
        raise slio.ConfigError("bench: need at least one frame")
    cfg = _load_config(args.config)
    states = cfg.trajectory.materialize(cfg.rig)
    # pre-render outside the timed region; the benchmark covers only the
    # detection + triangulation path
    frames = [
        render(cfg.rig, states[i % len(states)], cfg.noise, cfg.intensity, index=i)
        for i in range(args.frames)
    ]
    empty = render(cfg.rig, SceneState(user=None), cfg.noise, cfg.intensity,
                   index=args.frames)
    cal = calibrate(empty)
    start = time.perf_counter()
    detected = 0
    for frame in frames:
        est = track_frame(frame, cfg.rig, cal, cfg.detect)
        detected += est.pos is not None
    elapsed = time.perf_counter() - start
    fps = args.frames / elapsed if elapsed > 0 else float("inf")
    print(f"{args.frames} frames in {elapsed:.4f} s -> {fps:.1f} fps "
          f"({detected} detections)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sltrack",
        description="Structured-light laser-line floor tracker toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a trajectory to PGM frames + truth CSV")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out-dir", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("calibrate", help="find the wall line row in an empty frame")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("empty_frame", help="PGM of the empty scene")
    p.add_argument("-o", "--out", help="write calibration file (v_b=<int>)")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("track", help="track a directory of PGM frames")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--calibration", required=True, help="file from 'calibrate -o'")
    p.add_argument("frames_dir")
    p.add_argument("-o", "--out-csv", required=True)
    p.add_argument("--stream", metavar="HOST:PORT",
                   help="also publish SLT1 packets over UDP")
    p.add_argument("--smooth", action="store_true",
                   help="enable exponential smoothing regardless of config")
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("evaluate", help="compare estimates CSV against truth CSV")
    p.add_argument("estimates_csv")
    p.add_argument("truth_csv")
    p.add_argument("--json", help="also write metrics as JSON")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("bench", help="measure detection+triangulation throughput")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-n", "--frames", type=int, required=True)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (slio.ConfigError, slio.PgmError, CalibrationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
