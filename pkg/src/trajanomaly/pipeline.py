"""Frame-by-frame anomaly detection over a replayed detection stream.

``run_stream`` keeps per-track state and, on every frame:

1. appends detections to their tracks, interpolating short gaps and
   starting a new segment after long ones;
2. feeds the new positions to outstanding predictions and scores each
   detection window the moment its last frame is observed;
3. issues predictions for tracks that have ``T_in`` samples, sit on a
   stride boundary, head along the flow axis and are past the warmup.
   Anchors of tracks that do not qualify yet are held and predicted once
   they do; at the end of the stream each track is judged on its final
   points, as the batch filters do.

The batch route ``batch_scores`` (condition -> predict -> score) yields the
same score multiset for the same data, bit for bit.
"""

from __future__ import annotations

import math
import statistics
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .anomaly import DegeneratePolicy, ScoreResult, score_corpus, score_window, window_length
from .condition import IdAllocator, condition, heads_with_flow, interpolate_point
from .errors import DuplicateFrame, NonPositiveBuffer, OutOfOrderFrames, TrajAnomalyError
from .ingest import frames_from_tracks
from .predict import ConstantVelocityPredictor, Predictor, PredictorInput, issue_predictions
from .synthgen import SceneSpec, gen_normal
from .types import (DEFAULT_WINDOWS, AnomalyScore, PipelineConfig, TrackPoint, Trajectory,
                    validate_config)

MPH_TO_MPS = 0.44704
DEFAULT_LEAD_S = 9.0
DEFAULT_SPEED_MPS = 60 * MPH_TO_MPS

FrameBatch = tuple[int, Sequence[tuple[int, TrackPoint]]]


@dataclass(frozen=True, slots=True)
class AlertEvent:
    frame: int
    track_id: int
    window_sec: float
    method: str
    score: float
    threshold: float


@dataclass(frozen=True)
class ThroughputReport:
    trajectories_per_s: float
    vehicles_per_s: float
    wall_time_s: float
    frames: int
    predictions: int
    vehicles: int = 0


class StreamResult(NamedTuple):
    alerts: list[AlertEvent]
    scores: list[AnomalyScore]
    report: ThroughputReport


@dataclass(slots=True)
class _Pending:
    seg_id: int
    anchor_frame: int
    anchor: tuple[float, float]
    horizon: np.ndarray
    actual: np.ndarray
    filled: int = 0
    next_w: int = 0


@dataclass(slots=True)
class _Task:
    seg: "_Segment"
    anchor_frame: int
    anchor: tuple[float, float]
    window: list
    after: list = field(default_factory=list)


@dataclass(slots=True)
class _Segment:
    """One frame-contiguous stretch of a track (a new one starts after a long gap)."""

    seg_id: int
    first: TrackPoint
    last: TrackPoint
    buffer: deque
    count: int = 0
    outstanding: list = field(default_factory=list)
    awaiting: list = field(default_factory=list)
    # anchors (segment indices) held back until the track qualifies
    deferred: list = field(default_factory=list)
    history: list | None = None
    history_base: int = 0


@dataclass(slots=True)
class TrackState:
    track_id: int
    first: TrackPoint
    last: TrackPoint
    seg: _Segment
    segment: int = 0
    frames_since_prediction: int = 0
    status: str = "warming"
    closed: list = field(default_factory=list)

    @property
    def buffer(self) -> deque:
        return self.seg.buffer

    @property
    def outstanding(self) -> list:
        return self.seg.outstanding


class _Stream:
    def __init__(self, cfg: PipelineConfig, predictor: Predictor, policy: DegeneratePolicy,
                 windows: Sequence[float], threads: int, allocator: IdAllocator):
        self.cfg = cfg
        self.predictor = predictor
        self.policy = policy
        self.t_in = cfg.t_in_samples
        self.horizon = cfg.horizon_samples
        wins = sorted(set(float(w) for w in windows))
        self.windows = [(window_length(w, cfg, self.horizon), w) for w in wins]
        self.allocator = allocator
        self.whitelist = set(cfg.class_whitelist)
        self.tracks: dict[int, TrackState] = {}
        self.scores: list[AnomalyScore] = []
        self.alerts: list[AlertEvent] = []
        self.predictions = 0
        self.warmup_end: int | None = None
        self.now = 0
        self.pool = (ThreadPoolExecutor(max_workers=threads)
                     if threads > 1 and getattr(predictor, "thread_safe", False) else None)

    def _new_segment(self, seg_id: int, pt: TrackPoint) -> _Segment:
        return _Segment(seg_id, pt, pt, deque(maxlen=self.t_in))

    # -- per point -----------------------------------------------------------

    def _feed(self, p: _Pending, frame: int, x: float, y: float) -> bool:
        k = frame - p.anchor_frame
        if k != p.filled + 1:
            return False
        p.actual[p.filled, 0] = x
        p.actual[p.filled, 1] = y
        p.filled = k
        windows = self.windows
        while p.next_w < len(windows) and windows[p.next_w][0] <= k:
            w, wsec = windows[p.next_w]
            s = score_window(p.seg_id, p.anchor_frame, p.anchor, p.horizon, p.actual, w, wsec,
                             self.cfg, self.policy)
            self.scores.append(s)
            if s.ade_flag:
                self.alerts.append(AlertEvent(self.now, s.track_id, wsec, "ade", s.ade,
                                              self.cfg.ade_threshold))
            if s.angle_flag:
                self.alerts.append(AlertEvent(self.now, s.track_id, wsec, "angle", s.angle,
                                              self.cfg.angle_threshold))
            p.next_w += 1
        return p.next_w < len(windows) and k < self.horizon

    def _qualifies(self, st: TrackState, seg: _Segment, pt: TrackPoint) -> bool:
        """Presence and direction as known so far (the batch rules use the final point)."""
        axis = self.cfg.flow_axis
        return (seg.count >= self.cfg.min_presence_frames
                and heads_with_flow(st.first, pt, axis) and heads_with_flow(seg.first, pt, axis))

    def _release(self, seg: _Segment, tasks: list) -> None:
        """Turn held-back anchors into prediction tasks, replaying what followed them."""
        hist, base = seg.history, seg.history_base
        for idx in seg.deferred:
            i = idx - base
            a = hist[i]
            task = _Task(seg, a.frame, (a.cx, a.cy),
                         [(q.cx, q.cy) for q in hist[i + 1 - self.t_in:i + 1]], hist[i + 1:])
            seg.awaiting.append(task)
            tasks.append(task)
        seg.deferred = []
        seg.history = None

    def _add_point(self, st: TrackState, pt: TrackPoint, tasks: list) -> None:
        seg = st.seg
        seg.buffer.append(pt)
        seg.count += 1
        seg.last = pt
        st.last = pt
        st.frames_since_prediction += 1
        if seg.history is not None:
            seg.history.append(pt)
        if seg.outstanding:
            seg.outstanding = [p for p in seg.outstanding if self._feed(p, pt.frame, pt.cx, pt.cy)]
        for task in seg.awaiting:
            task.after.append(pt)

        anchor = (seg.count >= self.t_in and (seg.count - self.t_in) % self.cfg.prediction_stride == 0
                  and (self.warmup_end is None or pt.frame >= self.warmup_end))
        if not anchor and not seg.deferred:
            return
        if not self._qualifies(st, seg, pt):
            # keep the track; its direction or length may firm up later
            st.status = "warming"
            if anchor:
                if seg.history is None:
                    seg.history = list(seg.buffer)
                    seg.history_base = seg.count - len(seg.buffer)
                seg.deferred.append(seg.count - 1)
            return
        st.status = "eligible"
        if seg.deferred:
            self._release(seg, tasks)
        if anchor:
            st.frames_since_prediction = 0
            task = _Task(seg, pt.frame, (pt.cx, pt.cy), [(q.cx, q.cy) for q in seg.buffer])
            seg.awaiting.append(task)
            tasks.append(task)

    def _observe(self, tid: int, pt: TrackPoint, tasks: list) -> None:
        st = self.tracks.get(tid)
        if st is None:
            st = TrackState(tid, pt, pt, self._new_segment(tid, pt))
            self.tracks[tid] = st
            if pt.class_id not in self.whitelist:
                st.status = "dropped"
                return
            self._add_point(st, pt, tasks)
            return
        if st.status == "dropped":
            st.last = pt
            return
        gap = pt.frame - st.last.frame - 1
        if gap > self.cfg.max_gap_frames:
            st.closed.append(st.seg)
            st.segment += 1
            st.seg = self._new_segment(self.allocator(tid, st.segment), pt)
            st.status = "warming"
            self._add_point(st, pt, tasks)
            return
        prev = st.last
        for f in range(prev.frame + 1, pt.frame):
            self._add_point(st, interpolate_point(prev, pt, f), tasks)
        self._add_point(st, pt, tasks)

    # -- per frame -----------------------------------------------------------

    def _predict(self, task: _Task) -> np.ndarray:
        inp = PredictorInput.from_positions(task.window)
        out = np.ascontiguousarray(self.predictor.predict(inp, self.horizon), dtype=np.float64)
        if out.shape != (self.horizon, 2) or not np.all(np.isfinite(out)):
            raise TrajAnomalyError(
                f"predictor returned an invalid horizon for track {task.seg.seg_id}")
        return out

    def _run(self, tasks: list[_Task]) -> None:
        if self.pool is not None and len(tasks) > 1:
            horizons = list(self.pool.map(self._predict, tasks))
        else:
            horizons = [self._predict(t) for t in tasks]
        for task, horizon in zip(tasks, horizons):
            seg = task.seg
            seg.awaiting.remove(task)
            self.predictions += 1
            p = _Pending(seg.seg_id, task.anchor_frame, task.anchor, horizon,
                         np.empty((self.horizon, 2), dtype=np.float64))
            alive = True
            for pt in task.after:
                alive = self._feed(p, pt.frame, pt.cx, pt.cy)
                if not alive:
                    break
            if alive:
                seg.outstanding.append(p)

    def frame(self, frame: int, detections: Sequence[tuple[int, TrackPoint]]) -> None:
        if self.warmup_end is None:
            self.warmup_end = frame + self.t_in - 1
        self.now = frame
        tasks: list[_Task] = []
        seen = set()
        for tid, pt in sorted(detections, key=lambda d: d[0]):
            if tid in seen:
                raise DuplicateFrame(tid, frame)
            seen.add(tid)
            if pt.frame != frame:
                raise OutOfOrderFrames(f"detection for frame {pt.frame} inside batch {frame}")
            self._observe(tid, pt, tasks)
        if tasks:
            self._run(tasks)

    def finish(self) -> None:
        """Settle every track with its final points, as the batch filters do.

        Segments that end up heading against the flow or too short lose
        their provisional scores and alerts; held-back anchors of segments
        that qualify after all are predicted and scored now.
        """
        axis = self.cfg.flow_axis
        keep = set()
        tasks: list[_Task] = []
        for st in self.tracks.values():
            if st.status == "dropped" or not heads_with_flow(st.first, st.last, axis):
                continue
            for seg in (*st.closed, st.seg):
                if (seg.count >= self.cfg.min_presence_frames
                        and heads_with_flow(seg.first, seg.last, axis)):
                    keep.add(seg.seg_id)
                    if seg.deferred:
                        self._release(seg, tasks)
        if tasks:
            self._run(tasks)
        self.scores = [s for s in self.scores if s.track_id in keep]
        self.alerts = [a for a in self.alerts if a.track_id in keep]

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()


def run_stream(frames: Iterable[FrameBatch], cfg: PipelineConfig,
               predictor: Predictor | None = None,
               policy: DegeneratePolicy | str = DegeneratePolicy.MAX_DIVERGENCE,
               windows: Sequence[float] = DEFAULT_WINDOWS, threads: int = 1,
               allocator: IdAllocator | None = None) -> StreamResult:
    """Replay ``(frame, [(track_id, point), ...])`` batches in ascending frame order.

    Scores and alerts are produced as frames arrive. Anchors on tracks that
    do not yet look like approaching, long-enough traffic are held back
    rather than predicted, and released once the track qualifies. When the
    stream ends every track is judged on its final points, exactly as the
    batch filters judge it, so the returned scores equal the batch route's
    bit for bit. Windows left unfinished at the end are dropped, as in batch.
    """
    validate_config(cfg)
    stream = _Stream(cfg, predictor or ConstantVelocityPredictor(), DegeneratePolicy.parse(policy),
                     windows, threads, allocator or IdAllocator())
    n_frames = 0
    last = None
    start = time.perf_counter()
    try:
        for frame, detections in frames:
            if last is not None and frame <= last:
                raise OutOfOrderFrames(f"frame {frame} arrived after frame {last}")
            last = frame
            n_frames += 1
            stream.frame(frame, detections)
        stream.finish()
    finally:
        stream.close()
    wall = time.perf_counter() - start
    vehicles = sum(1 for st in stream.tracks.values() if st.status != "dropped")
    report = ThroughputReport(
        trajectories_per_s=stream.predictions / wall if wall > 0 else 0.0,
        vehicles_per_s=vehicles / wall if wall > 0 else 0.0,
        wall_time_s=wall, frames=n_frames, predictions=stream.predictions, vehicles=vehicles)
    scores = sorted(stream.scores, key=lambda s: s.sort_key)
    alerts = sorted(stream.alerts, key=lambda a: (a.frame, a.track_id, a.window_sec, a.method))
    return StreamResult(alerts, scores, report)


def batch_scores(trajs: Iterable[Trajectory], cfg: PipelineConfig,
                 predictor: Predictor | None = None,
                 policy: DegeneratePolicy | str = DegeneratePolicy.MAX_DIVERGENCE,
                 windows: Sequence[float] = DEFAULT_WINDOWS, threads: int = 1,
                 allocator: IdAllocator | None = None) -> ScoreResult:
    """Offline route: condition, predict, score."""
    validate_config(cfg)
    conditioned = condition(trajs, cfg, allocator)
    preds = issue_predictions(conditioned, cfg, predictor, threads=threads)
    return score_corpus(preds, conditioned, windows, cfg, policy)


# ---------------------------------------------------------------------------
# throughput


@dataclass(frozen=True)
class BenchReport:
    median: ThroughputReport
    runs: tuple[ThroughputReport, ...]
    scene_vehicles: int
    scene_vehicles_per_s: float
    threads: int

    def as_dict(self) -> dict:
        m = self.median
        return {
            "trajectories_per_s": m.trajectories_per_s,
            "vehicles_per_s": m.vehicles_per_s,
            "wall_time_s": m.wall_time_s,
            "frames": m.frames,
            "predictions": m.predictions,
            "vehicles": m.vehicles,
            "scene_vehicles": self.scene_vehicles,
            "scene_vehicles_per_s": self.scene_vehicles_per_s,
            "repetitions": len(self.runs),
            "threads": self.threads,
        }


def bench(scene: SceneSpec, cfg: PipelineConfig, predictor: Predictor | None = None,
          repetitions: int = 3, threads: int = 1,
          windows: Sequence[float] = DEFAULT_WINDOWS) -> BenchReport:
    """Time ``run_stream`` on generated traffic; generation is not timed.

    The reported run is the one with the median wall time.
    """
    if repetitions < 1:
        raise TrajAnomalyError("repetitions must be >= 1")
    corpus = gen_normal(scene)
    frames = frames_from_tracks(corpus)
    runs = []
    for _ in range(repetitions):
        runs.append(run_stream(frames, cfg, predictor, windows=windows, threads=threads).report)
    ordered = sorted(runs, key=lambda r: r.wall_time_s)
    median = ordered[(len(ordered) - 1) // 2]
    if not frames:
        median = ThroughputReport(0.0, 0.0, median.wall_time_s, 0, 0, 0)
    return BenchReport(median, tuple(runs), len(corpus),
                       len(corpus) / scene.duration_s, threads)


def median_rate(reports: Sequence[ThroughputReport]) -> float:
    return statistics.median(r.trajectories_per_s for r in reports)


# ---------------------------------------------------------------------------
# work-zone buffer


def buffer_time(detection_window_s: float, total_lead_s: float = DEFAULT_LEAD_S,
                speed_m_per_s: float = DEFAULT_SPEED_MPS) -> tuple[float, float]:
    """Warning time left after a detection window and the distance it covers.

    Returns ``(buffer_s, distance_m)`` with ``buffer_s = total_lead_s -
    detection_window_s`` and ``distance_m = buffer_s * speed_m_per_s``.
    """
    if not speed_m_per_s > 0 or not math.isfinite(speed_m_per_s):
        raise TrajAnomalyError(f"speed must be positive, got {speed_m_per_s}")
    if not detection_window_s < total_lead_s:
        raise NonPositiveBuffer(
            f"detection window {detection_window_s} s leaves no buffer within {total_lead_s} s")
    buffer_s = total_lead_s - detection_window_s
    return buffer_s, buffer_s * speed_m_per_s
