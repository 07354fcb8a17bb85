"""File formats: binary PGM frames, JSON run configuration, CSV tables.

The config file is strict JSON: every section and key is validated, and
unknown keys are rejected so experiment configs stay reproducible. See the
README for the full schema and ``configs/reference.json`` for a worked
example.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Any, BinaryIO, Mapping, Sequence

import numpy as np

from .detect import DetectParams
from .geometry import RigConfig, WorldPosition
from .pipeline import PositionEstimate, SmootherConfig
from .synth import (TRAJECTORY_KINDS, Frame, IntensityModel, NoiseParams,
                    SceneState, make_trajectory)

ESTIMATES_HEADER = "frame,timestamp_ms,detected,u_f,v_f,x_cm,z_cm"
TRUTH_HEADER = "frame,timestamp_ms,present,x_cm,z_cm,foot_width_cm"


class PgmError(ValueError):
    """Malformed PGM data; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


# --- PGM (binary P5, maxval 255) -----------------------------------------

def write_pgm(frame: Frame, sink: str | BinaryIO) -> None:
    """Write a frame as binary PGM: ``P5\\n<w> <h>\\n255\\n`` + raw rows."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    payload = frame.pixels.tobytes()
    if hasattr(sink, "write"):
        sink.write(header + payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(header + payload)


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmError("truncated header", pos)
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_pgm(source: str | BinaryIO) -> Frame:
    """Read a binary (P5) PGM with maxval 255 back into a Frame.

    Timestamp and index are not part of the format and come back as 0;
    callers sequencing frames from disk assign them.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()

    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise PgmError(f"unsupported magic {magic!r}, want binary P5", 0)
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise PgmError(f"non-numeric {name} {token!r}", pos - len(token)) from None
        fields.append(value)
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmError(f"bad dimensions {width}x{height}", pos)
    if maxval != 255:
        raise PgmError(f"maxval {maxval} unsupported, want 255", pos)
    pos += 1  # single whitespace byte after maxval
    expected = width * height
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise PgmError(
            f"truncated payload: want {expected} bytes, have {len(payload)}",
            pos + len(payload),
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Frame(width=width, height=height, pixels=pixels.copy())


# --- run configuration -----------------------------------------------------

@dataclass(frozen=True)
class TrajectorySpec:
    """Declarative trajectory: kind plus kind-specific parameters."""

    kind: str
    rate_hz: float
    duration_s: float
    foot_width: float
    params: Mapping[str, Any]

    def materialize(self, rig: RigConfig) -> list[SceneState]:
        return make_trajectory(self.kind, self.params, self.rate_hz,
                               self.duration_s, foot_width=self.foot_width,
                               rig=rig)


@dataclass(frozen=True)
class RunConfig:
    rig: RigConfig
    detect: DetectParams
    noise: NoiseParams
    intensity: IntensityModel
    smoother: SmootherConfig
    trajectory: TrajectorySpec


def _require(section: Mapping[str, Any], section_name: str, key: str) -> Any:
    if key not in section:
        raise ConfigError(f"{section_name}.{key}: missing")
    return section[key]


def _number(section: Mapping[str, Any], section_name: str, key: str) -> float:
    value = _require(section, section_name, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section_name}.{key}: expected a number, got {value!r}")
    return float(value)


def _integer(section: Mapping[str, Any], section_name: str, key: str) -> int:
    value = _require(section, section_name, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section_name}.{key}: expected an integer, got {value!r}")
    return value


def _boolean(section: Mapping[str, Any], section_name: str, key: str) -> bool:
    value = _require(section, section_name, key)
    if not isinstance(value, bool):
        raise ConfigError(f"{section_name}.{key}: expected true/false, got {value!r}")
    return value


def _point(section: Mapping[str, Any], section_name: str, key: str) -> tuple[float, float]:
    value = _require(section, section_name, key)
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"{section_name}.{key}: expected [x_cm, z_cm]")
    return float(value[0]), float(value[1])


def _reject_unknown(section: Mapping[str, Any], section_name: str,
                    allowed: set[str]) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{section_name}.{sorted(unknown)[0]}: unknown key")


def _section(root: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    value = _require(root, "config", name)
    if not isinstance(value, dict):
        raise ConfigError(f"config.{name}: expected an object")
    return value


_TRAJ_PARAM_KEYS = {
    "stationary": {"position"},
    "stroll": {"a", "b", "speed"},
    "circle": {"center", "radius", "omega"},
}


def _build_trajectory(section: Mapping[str, Any]) -> TrajectorySpec:
    name = "trajectory"
    kind = _require(section, name, "kind")
    if kind not in TRAJECTORY_KINDS:
        raise ConfigError(f"{name}.kind: unknown kind {kind!r}")
    _reject_unknown(section, name,
                    {"kind", "rate_hz", "duration_s", "foot_width"}
                    | _TRAJ_PARAM_KEYS[kind])
    rate = _number(section, name, "rate_hz")
    duration = _number(section, name, "duration_s")
    foot_width = _number(section, name, "foot_width")
    params: dict[str, Any] = {}
    if kind == "stationary":
        params["position"] = _point(section, name, "position")
    elif kind == "stroll":
        params["a"] = _point(section, name, "a")
        params["b"] = _point(section, name, "b")
        params["speed"] = _number(section, name, "speed")
    else:
        params["center"] = _point(section, name, "center")
        params["radius"] = _number(section, name, "radius")
        params["omega"] = _number(section, name, "omega")
    if rate <= 0:
        raise ConfigError(f"{name}.rate_hz: must be > 0")
    if duration <= 0:
        raise ConfigError(f"{name}.duration_s: must be > 0")
    if foot_width <= 0:
        raise ConfigError(f"{name}.foot_width: must be > 0")
    return TrajectorySpec(kind=kind, rate_hz=rate, duration_s=duration,
                          foot_width=foot_width, params=params)


def load_config(source: str | IO[str]) -> RunConfig:
    """Parse and fully validate a JSON run configuration.

    Raises :class:`ConfigError` naming the offending key on any missing
    key, type mismatch, unknown key, or invariant violation.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON ({exc})") from None
    if not isinstance(root, dict):
        raise ConfigError("config: top level must be an object")
    _reject_unknown(root, "config", {"rig", "detect", "noise", "intensity",
                                     "smoother", "trajectory"})

    rig_sec = _section(root, "rig")
    _reject_unknown(rig_sec, "rig", {"d", "f", "z_b", "width", "height", "u0", "v0"})
    try:
        rig = RigConfig(
            d=_number(rig_sec, "rig", "d"),
            f=_number(rig_sec, "rig", "f"),
            z_b=_number(rig_sec, "rig", "z_b"),
            width=_integer(rig_sec, "rig", "width"),
            height=_integer(rig_sec, "rig", "height"),
            u0=_number(rig_sec, "rig", "u0") if "u0" in rig_sec else None,
            v0=_number(rig_sec, "rig", "v0") if "v0" in rig_sec else None,
        )
    except ValueError as exc:
        raise ConfigError(f"rig.{exc}") from None

    det_sec = _section(root, "detect")
    _reject_unknown(det_sec, "detect",
                    {"ath_base", "ath_slope", "ath_min", "ath_max", "min_run"})
    try:
        detect = DetectParams(
            ath_base=_number(det_sec, "detect", "ath_base"),
            ath_slope=_number(det_sec, "detect", "ath_slope"),
            ath_min=_number(det_sec, "detect", "ath_min"),
            ath_max=_number(det_sec, "detect", "ath_max"),
            min_run=_integer(det_sec, "detect", "min_run"),
        )
    except ValueError as exc:
        raise ConfigError(f"detect: {exc}") from None

    noise_sec = _section(root, "noise")
    _reject_unknown(noise_sec, "noise", {"background_sigma", "background_mean", "seed"})
    try:
        noise = NoiseParams(
            background_sigma=_number(noise_sec, "noise", "background_sigma"),
            background_mean=_number(noise_sec, "noise", "background_mean"),
            seed=_integer(noise_sec, "noise", "seed"),
        )
    except ValueError as exc:
        raise ConfigError(f"noise.{exc}") from None

    int_sec = _section(root, "intensity")
    _reject_unknown(int_sec, "intensity", {"i_ref", "z_ref"})
    try:
        intensity = IntensityModel(
            i_ref=_number(int_sec, "intensity", "i_ref"),
            z_ref=_number(int_sec, "intensity", "z_ref"),
        )
    except ValueError as exc:
        raise ConfigError(f"intensity.{exc}") from None

    smooth_sec = _section(root, "smoother")
    _reject_unknown(smooth_sec, "smoother", {"alpha", "enabled"})
    try:
        smoother = SmootherConfig(
            alpha=_number(smooth_sec, "smoother", "alpha"),
            enabled=_boolean(smooth_sec, "smoother", "enabled"),
        )
    except ValueError as exc:
        raise ConfigError(f"smoother.{exc}") from None

    trajectory = _build_trajectory(_section(root, "trajectory"))
    return RunConfig(rig=rig, detect=detect, noise=noise, intensity=intensity,
                     smoother=smoother, trajectory=trajectory)


# --- CSV tables -------------------------------------------------------------

@dataclass(frozen=True)
class EstimateRow:
    """One estimates-CSV row; mirrors the file, not the full estimate."""

    frame: int
    timestamp_ms: int
    detected: bool
    u_f: float | None = None
    v_f: int | None = None
    x_cm: float | None = None
    z_cm: float | None = None


def _open_text(sink: str | IO[str], mode: str):
    if hasattr(sink, "read") or hasattr(sink, "write"):
        return sink, False
    return open(sink, mode, encoding="utf-8", newline=""), True


def write_estimates_csv(estimates: Sequence[PositionEstimate],
                        sink: str | IO[str]) -> None:
    """Write per-frame estimates; absent values become empty fields and
    cm/pixel centroids carry three decimals."""
    fh, owned = _open_text(sink, "w")
    try:
        fh.write(ESTIMATES_HEADER + "\n")
        for est in estimates:
            if est.pos is not None and est.detection is not None:
                fh.write(
                    f"{est.frame_index},{est.timestamp_ms},1,"
                    f"{est.detection.u_f:.3f},{est.detection.v_f},"
                    f"{est.pos.x:.3f},{est.pos.z:.3f}\n"
                )
            else:
                fh.write(f"{est.frame_index},{est.timestamp_ms},0,,,,\n")
    finally:
        if owned:
            fh.close()


def read_estimates_csv(source: str | IO[str]) -> list[EstimateRow]:
    fh, owned = _open_text(source, "r")
    try:
        lines = fh.read().splitlines()
    finally:
        if owned:
            fh.close()
    if not lines or lines[0] != ESTIMATES_HEADER:
        raise ValueError(f"estimates CSV must start with {ESTIMATES_HEADER!r}")
    rows = []
    for line in lines[1:]:
        frame, ts, detected, u_f, v_f, x, z = line.split(",")
        if detected == "1":
            rows.append(EstimateRow(int(frame), int(ts), True, float(u_f),
                                    int(v_f), float(x), float(z)))
        else:
            rows.append(EstimateRow(int(frame), int(ts), False))
    return rows


def write_truth_csv(truth: Sequence[SceneState], sink: str | IO[str]) -> None:
    fh, owned = _open_text(sink, "w")
    try:
        fh.write(TRUTH_HEADER + "\n")
        for i, state in enumerate(truth):
            if state.user is not None:
                fh.write(
                    f"{i},{state.timestamp_ms},1,{state.user.x:.3f},"
                    f"{state.user.z:.3f},{state.foot_width:.3f}\n"
                )
            else:
                fh.write(f"{i},{state.timestamp_ms},0,,,{state.foot_width:.3f}\n")
    finally:
        if owned:
            fh.close()


def read_truth_csv(source: str | IO[str]) -> list[SceneState]:
    fh, owned = _open_text(source, "r")
    try:
        lines = fh.read().splitlines()
    finally:
        if owned:
            fh.close()
    if not lines or lines[0] != TRUTH_HEADER:
        raise ValueError(f"truth CSV must start with {TRUTH_HEADER!r}")
    states = []
    for line in lines[1:]:
        _, ts, present, x, z, foot_width = line.split(",")
        user = WorldPosition(float(x), float(z)) if present == "1" else None
        states.append(SceneState(user=user, foot_width=float(foot_width),
                                 timestamp_ms=int(ts)))
    return states
