"""Domain types and configuration shared across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, TrajAnomalyError, Violation

# COCO ids as emitted by common YOLO exports
CAR, BUS, TRUCK = 2, 5, 7
DEFAULT_CLASSES = frozenset({CAR, BUS, TRUCK})

DEFAULT_WINDOWS = (0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True, slots=True)
class TrackPoint:
    frame: int
    cx: float
    cy: float
    w: float | None = None
    h: float | None = None
    class_id: int = CAR

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise TrajAnomalyError(f"negative frame index {self.frame}")
        if (self.w is not None and self.w < 0) or (self.h is not None and self.h < 0):
            raise TrajAnomalyError(f"negative box size at frame {self.frame}")


@dataclass(frozen=True, slots=True)
class Trajectory:
    track_id: int
    points: tuple[TrackPoint, ...]
    sample_rate_hz: float = 5.0
    label: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.points, tuple):
            object.__setattr__(self, "points", tuple(self.points))
        pts = self.points
        for a, b in zip(pts, pts[1:]):
            if b.frame <= a.frame:
                raise TrajAnomalyError(
                    f"track {self.track_id}: frames not strictly increasing at {b.frame}"
                )
        if self.label not in (None, 0, 1):
            raise TrajAnomalyError(f"track {self.track_id}: label must be 0 or 1")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def class_id(self) -> int:
        # trackers can flicker class mid-track; the first detection decides
        return self.points[0].class_id

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame

    def is_contiguous(self) -> bool:
        pts = self.points
        return all(b.frame - a.frame == 1 for a, b in zip(pts, pts[1:]))

    def positions(self) -> list[tuple[float, float]]:
        return [(p.cx, p.cy) for p in self.points]

    def index_of(self, frame: int) -> int | None:
        """Index of ``frame`` in the points, or None. O(1) on contiguous tracks."""
        pts = self.points
        if not pts:
            return None
        i = frame - pts[0].frame
        if 0 <= i < len(pts) and pts[i].frame == frame:
            return i
        lo, hi = 0, len(pts)
        while lo < hi:
            mid = (lo + hi) // 2
            if pts[mid].frame < frame:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(pts) and pts[lo].frame == frame:
            return lo
        return None


@dataclass(frozen=True, slots=True)
class PredictionRecord:
    track_id: int
    anchor_frame: int
    anchor_pos: tuple[float, float]
    horizon: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.horizon) < 1:
            raise TrajAnomalyError("prediction horizon must hold at least one point")

    @property
    def key(self) -> tuple[int, int]:
        return (self.track_id, self.anchor_frame)


@dataclass(frozen=True, slots=True)
class AnomalyScore:
    track_id: int
    anchor_frame: int
    window_sec: float
    ade: float | None
    angle: float | None
    ade_flag: bool = False
    angle_flag: bool = False
    degenerate: bool = False

    @property
    def sort_key(self) -> tuple[int, int, float]:
        return (self.track_id, self.anchor_frame, self.window_sec)


def _samples(seconds: float, rate: float) -> int:
    return int(round(seconds * rate))


def _is_integral(x: float) -> bool:
    return math.isfinite(x) and abs(x - round(x)) <= 1e-9


@dataclass(frozen=True)
class PipelineConfig:
    sample_rate_hz: float = 5.0
    t_in_sec: float = 3.0
    t_pred_sec: float = 5.0
    prediction_stride: int = 5
    class_whitelist: frozenset[int] = DEFAULT_CLASSES
    flow_axis: tuple[float, float] = (0.0, 1.0)
    min_presence_frames: int = 15
    max_gap_frames: int = 5
    ade_threshold: float | None = None
    angle_threshold: float | None = None
    degenerate_eps: float = 1e-6

    @property
    def t_in_samples(self) -> int:
        return _samples(self.t_in_sec, self.sample_rate_hz)

    @property
    def horizon_samples(self) -> int:
        return _samples(self.t_pred_sec, self.sample_rate_hz)

    def window_samples(self, window_sec: float) -> int:
        return _samples(window_sec, self.sample_rate_hz)

    def violations(self) -> list[Violation]:
        out: list[Violation] = []
        rate = self.sample_rate_hz
        if not (rate > 0 and math.isfinite(rate)):
            out.append(Violation("ZeroSampleRate", f"sample_rate_hz must be positive, got {rate}"))
        else:
            for name in ("t_in_sec", "t_pred_sec"):
                n = getattr(self, name) * rate
                if not _is_integral(n) or round(n) < 1:
                    out.append(Violation(
                        "NonIntegerHorizon",
                        f"{name} x sample_rate_hz = {n!r} is not a positive integer",
                    ))
        norm = math.hypot(*self.flow_axis)
        if abs(norm - 1.0) > 1e-9:
            out.append(Violation("NonUnitFlowAxis", f"flow_axis norm is {norm!r}"))
        if self.prediction_stride < 1:
            out.append(Violation("InvalidStride", "prediction_stride must be >= 1"))
        if self.min_presence_frames < 1:
            out.append(Violation("InvalidPresence", "min_presence_frames must be >= 1"))
        if self.max_gap_frames < 0:
            out.append(Violation("InvalidGap", "max_gap_frames must be >= 0"))
        if not self.degenerate_eps >= 0:
            out.append(Violation("InvalidEpsilon", "degenerate_eps must be >= 0"))
        return out


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    """Return ``cfg`` unchanged, or raise ConfigError listing every violation."""
    problems = cfg.violations()
    if problems:
        raise ConfigError(problems)
    return cfg


# ---------------------------------------------------------------------------
# key = value config text


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TrajAnomalyError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise TrajAnomalyError(f"config line {lineno}: empty key")
        out[key] = value
    return out


def read_kv(path: str | Path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def _parse_value(kind: str, raw: str, key: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "optfloat":
            return None if raw.lower() in ("", "none") else float(raw)
        if kind == "vec2":
            parts = [float(s) for s in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("need two components")
            return (parts[0], parts[1])
        if kind == "intset":
            return frozenset(int(s) for s in raw.split(",") if s.strip())
        if kind == "str":
            return raw
    except ValueError as exc:
        raise TrajAnomalyError(f"config key {key!r}: cannot parse {raw!r} ({exc})") from None
    raise AssertionError(kind)


def _format_value(kind: str, value) -> str:
    if kind in ("float", "optfloat"):
        return "none" if value is None else repr(float(value))
    if kind == "vec2":
        return f"{value[0]!r},{value[1]!r}"
    if kind == "intset":
        return ",".join(str(v) for v in sorted(value))
    return str(value)


_PIPELINE_KINDS = {
    "sample_rate_hz": "float",
    "t_in_sec": "float",
    "t_pred_sec": "float",
    "prediction_stride": "int",
    "class_whitelist": "intset",
    "flow_axis": "vec2",
    "min_presence_frames": "int",
    "max_gap_frames": "int",
    "ade_threshold": "optfloat",
    "angle_threshold": "optfloat",
    "degenerate_eps": "float",
}


def from_kv(cls, values: Mapping[str, str], kinds: Mapping[str, str], strict: bool = True):
    """Build dataclass ``cls`` from string values; unknown keys raise when ``strict``."""
    unknown = set(values) - set(kinds)
    if strict and unknown:
        raise TrajAnomalyError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = {k: _parse_value(kinds[k], v, k) for k, v in values.items() if k in kinds}
    return cls(**kwargs)


def to_kv(obj, kinds: Mapping[str, str]) -> str:
    lines = [f"{f.name} = {_format_value(kinds[f.name], getattr(obj, f.name))}"
             for f in fields(obj) if f.name in kinds]
    return "\n".join(lines) + "\n"


def config_from_kv(values: Mapping[str, str], strict: bool = True) -> PipelineConfig:
    return from_kv(PipelineConfig, values, _PIPELINE_KINDS, strict=strict)


def config_to_text(cfg: PipelineConfig) -> str:
    return to_kv(cfg, _PIPELINE_KINDS)


def load_config(path: str | Path, strict: bool = False, **overrides) -> PipelineConfig:
    cfg = config_from_kv(read_kv(path), strict=strict)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return validate_config(replace(cfg, **overrides))


def label_map(trajs: Iterable[Trajectory]) -> dict[int, int]:
    return {t.track_id: t.label for t in trajs if t.label is not None}


__all__ = [
    "AnomalyScore", "BUS", "CAR", "DEFAULT_CLASSES", "DEFAULT_WINDOWS", "PipelineConfig",
    "PredictionRecord", "TRUCK", "TrackPoint", "Trajectory", "config_from_kv",
    "config_to_text", "label_map", "load_config", "parse_kv", "read_kv",
    "validate_config",
]
