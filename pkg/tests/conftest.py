from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import settings

from trajanomaly.synthgen import AnomalySpec, SceneSpec, make_corpus
from trajanomaly.types import BUS, CAR, TRUCK, TrackPoint, Trajectory

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

PEDESTRIAN = 0


def random_corpus(rng: np.random.Generator, n_tracks: int = 8, gaps: bool = True,
                  classes=(CAR, BUS, TRUCK, PEDESTRIAN), labeled: bool = True,
                  max_len: int = 60) -> list[Trajectory]:
    """Messy tracks: random heading, random gaps, random classes, optional labels."""
    out = []
    for tid in range(1, n_tracks + 1):
        n = int(rng.integers(1, max_len))
        steps = rng.integers(1, 9, size=n) if gaps else np.ones(n, dtype=int)
        if gaps:
            steps = np.where(rng.random(n) < 0.8, 1, steps)
        frames = int(rng.integers(0, 30)) + np.cumsum(steps) - steps[0]
        start = rng.uniform(0, 1000, size=2)
        vel = rng.normal(0, 8, size=2)
        xy = start + np.outer(frames - frames[0], vel) + rng.normal(0, 1.5, size=(n, 2))
        cls = int(rng.choice(classes))
        has_box = bool(rng.integers(2))
        pts = tuple(
            TrackPoint(int(f), float(x), float(y),
                       float(rng.uniform(10, 60)) if has_box else None,
                       float(rng.uniform(10, 60)) if has_box else None, cls)
            for f, (x, y) in zip(frames, xy))
        label = int(rng.integers(2)) if labeled and rng.random() < 0.8 else None
        out.append(Trajectory(tid, pts, 5.0, label))
    return out


def linear_track(tid: int, n: int, start=(100.0, 0.0), step=(0.0, 20.0), first_frame: int = 0,
                 cls: int = CAR, label=None) -> Trajectory:
    pts = tuple(TrackPoint(first_frame + i, start[0] + i * step[0], start[1] + i * step[1],
                           40.0, 30.0, cls) for i in range(n))
    return Trajectory(tid, pts, 5.0, label)


def messy_corpus(seed: int, duration: float = 40.0) -> list[Trajectory]:
    """Synthetic traffic with dropped detections, foreign classes and reversed tracks."""
    rng = np.random.default_rng(seed)
    kind = ("lane_departure", "drift_to_camera", "abrupt_halt")[seed % 3]
    corpus = make_corpus(SceneSpec(duration_s=duration, vehicles_per_s=1.5, seed=seed),
                         AnomalySpec(kind, onset_s=2.0, fraction=0.2))
    out = []
    for t in corpus:
        pts = [p for p in t.points if rng.random() > 0.15]
        if len(pts) > 8 and rng.random() < 0.2:
            cut = int(rng.integers(2, len(pts) - 2))
            pts = pts[:cut] + [replace(p, frame=p.frame + 6) for p in pts[cut:]]
        if not pts:
            continue
        r = rng.random()
        if r < 0.1:
            pts = [replace(p, class_id=PEDESTRIAN) for p in pts]
        elif r < 0.2:
            pts = [replace(p, cy=1000.0 - p.cy) for p in pts]
        out.append(Trajectory(t.track_id, tuple(pts), t.sample_rate_hz, t.label))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
