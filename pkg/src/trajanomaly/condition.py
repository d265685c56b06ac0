"""Data conditioning: class whitelist, travel direction, gap repair, presence.

``condition`` composes the four filters in the order
classes -> direction -> gaps -> presence, so fragments created by splitting
at long gaps are still subject to the minimum-length rule. Split fragments
are also re-checked for direction; without that a second pass could drop a
fragment that heads against the flow and conditioning would not be
idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import TrajAnomalyError
from .types import PipelineConfig, TrackPoint, Trajectory

SPLIT_ID_BASE = 1_000_000


@dataclass(frozen=True)
class IdAllocator:
    """Deterministic ids for segments split off a track at long gaps.

    Segment ``k >= 1`` of track ``t`` becomes ``k * stride + t``. The id depends
    only on the track and segment index, never on processing order, so batch
    and streaming runs agree. Original ids must stay below ``stride``.
    """

    stride: int = SPLIT_ID_BASE

    def __call__(self, track_id: int, segment: int) -> int:
        if not 0 <= track_id < self.stride:
            raise TrajAnomalyError(
                f"track id {track_id} outside [0, {self.stride}); cannot derive split ids")
        return segment * self.stride + track_id


def filter_classes(trajs: Iterable[Trajectory], whitelist) -> list[Trajectory]:
    allowed = set(whitelist)
    return [t for t in trajs if len(t) and t.class_id in allowed]


def heads_with_flow(first: TrackPoint, last: TrackPoint, flow_axis) -> bool:
    # strict: a stationary track is not approaching
    return (last.cx - first.cx) * flow_axis[0] + (last.cy - first.cy) * flow_axis[1] > 0.0


def filter_direction(trajs: Iterable[Trajectory], flow_axis) -> list[Trajectory]:
    return [t for t in trajs if len(t) and heads_with_flow(t.points[0], t.points[-1], flow_axis)]


def filter_presence(trajs: Iterable[Trajectory], min_presence_frames: int) -> list[Trajectory]:
    return [t for t in trajs if len(t) >= min_presence_frames]


def _lerp(a: float | None, b: float | None, t: float) -> float | None:
    if a is None or b is None:
        return None
    return a + (b - a) * t


def interpolate_point(a: TrackPoint, b: TrackPoint, frame: int) -> TrackPoint:
    """Linearly interpolated point at ``frame`` strictly between ``a`` and ``b``."""
    t = (frame - a.frame) / (b.frame - a.frame)
    return TrackPoint(frame, a.cx + (b.cx - a.cx) * t, a.cy + (b.cy - a.cy) * t,
                      _lerp(a.w, b.w, t), _lerp(a.h, b.h, t), a.class_id)


def gap_segments(points: tuple[TrackPoint, ...], max_gap_frames: int) -> list[list[TrackPoint]]:
    """Fill short gaps and cut at long ones; every returned segment is contiguous."""
    if not points:
        return []
    segments = [[points[0]]]
    for prev, cur in zip(points, points[1:]):
        gap = cur.frame - prev.frame - 1
        if gap > max_gap_frames:
            segments.append([cur])
            continue
        seg = segments[-1]
        for f in range(prev.frame + 1, cur.frame):
            seg.append(interpolate_point(prev, cur, f))
        seg.append(cur)
    return segments


def fill_gaps(traj: Trajectory, max_gap_frames: int,
              allocator: IdAllocator | None = None) -> list[Trajectory]:
    """Return one or more frame-contiguous trajectories covering ``traj``.

    Gaps of up to ``max_gap_frames`` missing frames are filled by linear
    interpolation of cx, cy, w and h. Longer gaps split the track; the first
    segment keeps ``traj.track_id`` and later ones take ids from ``allocator``.
    """
    allocator = allocator or IdAllocator()
    segs = gap_segments(traj.points, max_gap_frames)
    return [Trajectory(traj.track_id if k == 0 else allocator(traj.track_id, k), tuple(seg),
                       traj.sample_rate_hz, traj.label)
            for k, seg in enumerate(segs)]


def fill_gaps_corpus(trajs: Iterable[Trajectory], max_gap_frames: int,
                     allocator: IdAllocator | None = None) -> list[Trajectory]:
    out = [seg for t in trajs for seg in fill_gaps(t, max_gap_frames, allocator)]
    return sorted(out, key=lambda t: t.track_id)


def condition(trajs: Iterable[Trajectory], cfg: PipelineConfig,
              allocator: IdAllocator | None = None) -> list[Trajectory]:
    kept = filter_classes(trajs, cfg.class_whitelist)
    kept = filter_direction(kept, cfg.flow_axis)
    kept = fill_gaps_corpus(kept, cfg.max_gap_frames, allocator)
    kept = filter_direction(kept, cfg.flow_axis)
    return filter_presence(kept, cfg.min_presence_frames)
