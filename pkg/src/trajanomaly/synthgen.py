"""Labeled synthetic highway corpora in image-plane pixels.

Normal traffic drives straight down lanes along ``flow_axis`` at jittered
constant speed. ``inject`` turns a seeded share of tracks into one of three
anomaly kinds:

lane_departure
    lateral offset growing at ``severity`` px/s after onset.
drift_to_camera
    heading turns toward the camera side, ramping linearly to ``severity``
    radians over one second, speed unchanged.
abrupt_halt
    speed decays linearly to zero over ``severity`` seconds, then the
    vehicle holds position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import TrajAnomalyError
from .types import BUS, CAR, TRUCK, TrackPoint, Trajectory, from_kv, to_kv

ANOMALY_KINDS = ("lane_departure", "drift_to_camera", "abrupt_halt")
DEFAULT_SEVERITY = {"lane_departure": 30.0, "drift_to_camera": 0.3, "abrupt_halt": 1.0}
DRIFT_RAMP_S = 1.0

# (class_id, share, box w, box h)
_VEHICLE_MIX = ((CAR, 0.8, 40.0, 30.0), (TRUCK, 0.15, 60.0, 45.0), (BUS, 0.05, 65.0, 50.0))


@dataclass(frozen=True)
class SceneSpec:
    lanes: int = 3
    lane_spacing_px: float = 40.0
    flow_axis: tuple[float, float] = (0.0, 1.0)
    speed_px_per_s: float = 100.0
    speed_jitter_px_per_s: float = 10.0
    duration_s: float = 60.0
    vehicles_per_s: float = 2.0
    noise_px: float = 1.0
    seed: int = 0
    sample_rate_hz: float = 5.0
    origin: tuple[float, float] = (640.0, 0.0)
    track_length_px: float = 1000.0

    def validate(self) -> "SceneSpec":
        problems = []
        if self.lanes < 1:
            problems.append("lanes must be >= 1")
        for name in ("lane_spacing_px", "speed_px_per_s", "duration_s", "sample_rate_hz",
                     "track_length_px"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive")
        for name in ("vehicles_per_s", "noise_px", "speed_jitter_px_per_s"):
            if not getattr(self, name) >= 0:
                problems.append(f"{name} must be non-negative")
        if abs(math.hypot(*self.flow_axis) - 1.0) > 1e-9:
            problems.append("flow_axis must be a unit vector")
        if problems:
            raise TrajAnomalyError("invalid scene: " + "; ".join(problems))
        return self


@dataclass(frozen=True)
class AnomalySpec:
    kind: str = "lane_departure"
    onset_s: float = 4.0
    severity: float | None = None
    fraction: float = 0.1
    camera_side: int = 1

    @property
    def magnitude(self) -> float:
        return DEFAULT_SEVERITY[self.kind] if self.severity is None else self.severity

    def validate(self) -> "AnomalySpec":
        if self.kind not in ANOMALY_KINDS:
            raise TrajAnomalyError(f"unknown anomaly kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise TrajAnomalyError("fraction must lie in [0, 1]")
        if self.onset_s < 0:
            raise TrajAnomalyError("onset_s must be >= 0")
        if self.camera_side not in (-1, 1):
            raise TrajAnomalyError("camera_side must be +1 or -1")
        if self.kind == "abrupt_halt" and not self.magnitude > 0:
            raise TrajAnomalyError("abrupt_halt severity (decay seconds) must be positive")
        return self


SCENE_KINDS = {
    "lanes": "int", "lane_spacing_px": "float", "flow_axis": "vec2",
    "speed_px_per_s": "float", "speed_jitter_px_per_s": "float", "duration_s": "float",
    "vehicles_per_s": "float", "noise_px": "float", "seed": "int",
    "sample_rate_hz": "float", "origin": "vec2", "track_length_px": "float",
}
ANOMALY_KINDS_KV = {
    "kind": "str", "onset_s": "float", "severity": "optfloat", "fraction": "float",
    "camera_side": "int",
}


def scene_from_kv(values, strict: bool = False) -> SceneSpec:
    return from_kv(SceneSpec, values, SCENE_KINDS, strict=strict).validate()


def anomaly_from_kv(values, strict: bool = False) -> AnomalySpec:
    return from_kv(AnomalySpec, values, ANOMALY_KINDS_KV, strict=strict).validate()


def scene_to_text(scene: SceneSpec) -> str:
    return to_kv(scene, SCENE_KINDS)


def _perp(v: tuple[float, float]) -> tuple[float, float]:
    return (-v[1], v[0])


def _vehicle(scene: SceneSpec, index: int, arrival_s: float) -> tuple[list[TrackPoint], int]:
    rng = np.random.default_rng([scene.seed, index])
    lane = int(rng.integers(scene.lanes))
    speed = scene.speed_px_per_s + scene.speed_jitter_px_per_s * float(rng.standard_normal())
    speed = max(speed, 0.2 * scene.speed_px_per_s)
    shares = np.array([m[1] for m in _VEHICLE_MIX])
    cls, _, bw, bh = _VEHICLE_MIX[int(rng.choice(len(_VEHICLE_MIX), p=shares / shares.sum()))]

    rate = scene.sample_rate_hz
    ax, ay = scene.flow_axis
    lx, ly = _perp(scene.flow_axis)
    offset = (lane - (scene.lanes - 1) / 2.0) * scene.lane_spacing_px
    x0 = scene.origin[0] + offset * lx
    y0 = scene.origin[1] + offset * ly

    first = math.ceil(arrival_s * rate - 1e-9)
    last_allowed = int(math.floor(scene.duration_s * rate + 1e-9)) - 1
    n_max = int(math.floor(scene.track_length_px / speed * rate)) + 1
    frames = range(first, min(first + n_max, last_allowed + 1))
    if not len(frames):
        return [], cls
    t = (np.arange(frames.start, frames.stop) / rate) - arrival_s
    s = speed * t
    xs = x0 + s * ax
    ys = y0 + s * ay
    if scene.noise_px > 0:
        noise = rng.normal(0.0, scene.noise_px, size=(len(t), 2))
        xs = xs + noise[:, 0]
        ys = ys + noise[:, 1]
    pts = [TrackPoint(f, float(x), float(y), bw, bh, cls)
           for f, x, y in zip(frames, xs.tolist(), ys.tolist())]
    return pts, cls


def gen_normal(scene: SceneSpec) -> list[Trajectory]:
    """Poisson-arrival normal traffic, every track labeled 0; seeded and reproducible."""
    scene.validate()
    rng = np.random.default_rng(scene.seed)
    n = int(rng.poisson(scene.vehicles_per_s * scene.duration_s))
    arrivals = np.sort(rng.uniform(0.0, scene.duration_s, size=n))
    out = []
    for i, t_a in enumerate(arrivals.tolist()):
        pts, _ = _vehicle(scene, i, t_a)
        if pts:
            out.append(Trajectory(len(out) + 1, tuple(pts), scene.sample_rate_hz, 0))
    return out


def _drift_offsets(tau: np.ndarray, theta_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Forward and sideways distance travelled (per unit speed) under a heading ramp."""
    ramp = DRIFT_RAMP_S
    a = theta_max / ramp
    t1 = np.minimum(tau, ramp)
    if a == 0.0:
        fwd, side = t1.copy(), np.zeros_like(t1)
    else:
        fwd = np.sin(a * t1) / a
        side = (1.0 - np.cos(a * t1)) / a
    rest = np.maximum(tau - ramp, 0.0)
    return fwd + rest * math.cos(theta_max), side + rest * math.sin(theta_max)


def perturb(traj: Trajectory, spec: AnomalySpec, side: int) -> Trajectory:
    """Apply ``spec`` to one track from ``onset_s`` (seconds after its first sample)."""
    pts = traj.points
    rate = traj.sample_rate_hz
    p0, pl = pts[0], pts[-1]
    span = (pl.frame - p0.frame) / rate
    vx, vy = (pl.cx - p0.cx) / span, (pl.cy - p0.cy) / span
    speed = math.hypot(vx, vy)
    if speed == 0.0:
        raise TrajAnomalyError(f"track {traj.track_id} does not move; cannot perturb")
    fx, fy = vx / speed, vy / speed
    lx, ly = _perp((fx, fy))

    t = np.array([(p.frame - p0.frame) / rate for p in pts])
    tau = np.maximum(t - spec.onset_s, 0.0)
    sev = spec.magnitude
    if spec.kind == "lane_departure":
        fwd = np.zeros_like(tau)
        lat = side * sev * tau
    elif spec.kind == "drift_to_camera":
        f_dist, s_dist = _drift_offsets(tau, sev)
        fwd = speed * (f_dist - tau)
        lat = spec.camera_side * speed * s_dist
    else:
        frac = np.where(tau < sev, tau - tau * tau / (2.0 * sev), sev / 2.0)
        fwd = speed * (frac - tau)
        lat = np.zeros_like(tau)
    dx = (fwd * fx + lat * lx).tolist()
    dy = (fwd * fy + lat * ly).tolist()
    new = tuple(p if tau_k == 0.0 else TrackPoint(p.frame, p.cx + ddx, p.cy + ddy, p.w, p.h,
                                                  p.class_id)
                for p, tau_k, ddx, ddy in zip(pts, tau.tolist(), dx, dy))
    return replace(traj, points=new, label=1)


def inject(corpus: Sequence[Trajectory], spec: AnomalySpec, seed: int) -> list[Trajectory]:
    """Perturb a seeded ``fraction`` of the tracks and label them 1.

    Only tracks lasting longer than ``onset_s`` are candidates, so every
    label-1 track really is perturbed. Untouched tracks are returned as-is.
    """
    spec.validate()
    corpus = list(corpus)
    if not corpus:
        raise TrajAnomalyError("cannot inject into an empty corpus")
    eligible = [i for i, t in enumerate(corpus)
                if len(t) > 1 and (t.last_frame - t.first_frame) / t.sample_rate_hz > spec.onset_s]
    n = min(int(round(spec.fraction * len(corpus))), len(eligible))
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(eligible, size=n, replace=False).tolist()) if n else set()
    out = []
    for i, t in enumerate(corpus):
        if i in chosen:
            side = 1 if np.random.default_rng([seed, t.track_id]).random() < 0.5 else -1
            out.append(perturb(t, spec, side))
        else:
            out.append(t)
    return out


def make_corpus(scene: SceneSpec, anomaly: AnomalySpec | None = None,
                inject_seed: int | None = None) -> list[Trajectory]:
    corpus = gen_normal(scene)
    if anomaly is not None and anomaly.fraction > 0 and corpus:
        corpus = inject(corpus, anomaly, scene.seed + 1 if inject_seed is None else inject_seed)
    return corpus
