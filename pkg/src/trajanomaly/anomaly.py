"""Prediction-vs-actual anomaly scores: displacement error and chord angle.

Both scores look at a detection window of ``w`` samples after a
prediction's anchor frame:

* ADE: mean Euclidean distance between predicted and observed positions
  over steps ``1..w`` (per vehicle).
* angle: angle between the observed chord ``actual(anchor + w) - anchor``
  and the predicted chord ``horizon[w] - anchor``.
"""

from __future__ import annotations

import csv
import enum
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import (DegenerateChord, MissingActualFrames, ParseError, TrajAnomalyError,
                     WindowExceedsHorizon)
from .types import AnomalyScore, PipelineConfig, PredictionRecord, Trajectory


class DegeneratePolicy(enum.Enum):
    """What an angle score becomes when a chord is (numerically) zero-length."""

    ERROR = "error"
    MAX_DIVERGENCE = "max_divergence"
    ZERO = "zero"

    @classmethod
    def parse(cls, value: "str | DegeneratePolicy") -> "DegeneratePolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise TrajAnomalyError(f"unknown degenerate policy {value!r}") from None


def resolve_degenerate(code: int, policy: DegeneratePolicy) -> float:
    """Angle assigned when ``code`` (1 or 2) chords are degenerate."""
    if policy is DegeneratePolicy.ERROR:
        raise DegenerateChord(f"{code} zero-length chord(s) in angle score")
    if policy is DegeneratePolicy.MAX_DIVERGENCE:
        # one chord moving, the other not: maximally divergent
        return math.pi if code == 1 else 0.0
    return 0.0


def window_length(window_sec: float, cfg: PipelineConfig, horizon: int) -> int:
    w = cfg.window_samples(window_sec)
    if w < 1:
        raise WindowExceedsHorizon(f"window {window_sec} s is shorter than one sample")
    if w > horizon:
        raise WindowExceedsHorizon(f"window {window_sec} s ({w} samples) exceeds horizon {horizon}")
    return w


def actual_after(traj: Trajectory, anchor_frame: int, w: int) -> np.ndarray:
    """Observed positions at ``anchor_frame + 1 .. anchor_frame + w``."""
    i = traj.index_of(anchor_frame + 1)
    pts = traj.points[i:i + w] if i is not None else ()
    if len(pts) < w or pts[-1].frame != anchor_frame + w:
        raise MissingActualFrames(
            f"track {traj.track_id}: frames {anchor_frame + 1}..{anchor_frame + w} not all observed")
    return np.array([(p.cx, p.cy) for p in pts], dtype=np.float64)


def _horizon_array(pred: PredictionRecord) -> np.ndarray:
    return np.array(pred.horizon, dtype=np.float64)


def ade_score(pred: PredictionRecord, actual: Trajectory, window_sec: float,
              cfg: PipelineConfig) -> float:
    w = window_length(window_sec, cfg, len(pred.horizon))
    return _kernels.ade(_horizon_array(pred), actual_after(actual, pred.anchor_frame, w), w)


def angle_score(pred: PredictionRecord, actual: Trajectory, window_sec: float,
                cfg: PipelineConfig,
                policy: DegeneratePolicy = DegeneratePolicy.MAX_DIVERGENCE) -> float:
    """Angle in radians between observed and predicted chords.

    Raises DegenerateChord under ``DegeneratePolicy.ERROR`` when a chord is
    shorter than ``cfg.degenerate_eps``.
    """
    w = window_length(window_sec, cfg, len(pred.horizon))
    obs = actual_after(actual, pred.anchor_frame, w)
    ax, ay = pred.anchor_pos
    fx, fy = pred.horizon[w - 1]
    angle, code = _kernels.chord_angle(ax, ay, obs[w - 1, 0], obs[w - 1, 1], fx, fy,
                                       cfg.degenerate_eps)
    if code:
        return resolve_degenerate(code, DegeneratePolicy.parse(policy))
    return angle


def flag_values(ade: float | None, angle: float | None,
                cfg: PipelineConfig) -> tuple[bool, bool]:
    """Strict threshold comparisons; an unset threshold never flags."""
    ade_flag = ade is not None and cfg.ade_threshold is not None and ade > cfg.ade_threshold
    angle_flag = (angle is not None and cfg.angle_threshold is not None
                  and angle > cfg.angle_threshold)
    return ade_flag, angle_flag


def flag(score: AnomalyScore, cfg: PipelineConfig) -> AnomalyScore:
    if cfg.ade_threshold is None and cfg.angle_threshold is None:
        raise TrajAnomalyError("flagging needs ade_threshold and/or angle_threshold")
    ade_flag, angle_flag = flag_values(score.ade, score.angle, cfg)
    return AnomalyScore(score.track_id, score.anchor_frame, score.window_sec, score.ade,
                        score.angle, ade_flag, angle_flag, score.degenerate)


def make_score(track_id: int, anchor_frame: int, window_sec: float, ade: float,
               angle_raw: float, code: int, cfg: PipelineConfig,
               policy: DegeneratePolicy) -> AnomalyScore:
    """Assemble one score row from raw kernel outputs."""
    angle: float | None = angle_raw
    if code:
        if policy is DegeneratePolicy.ERROR:
            angle = None
        else:
            angle = resolve_degenerate(code, policy)
    ade_flag, angle_flag = flag_values(ade, angle, cfg)
    return AnomalyScore(track_id, anchor_frame, window_sec, ade, angle,
                        ade_flag, angle_flag, bool(code))


def score_window(track_id: int, anchor_frame: int, anchor, horizon: np.ndarray,
                 actual: np.ndarray, w: int, window_sec: float, cfg: PipelineConfig,
                 policy: DegeneratePolicy) -> AnomalyScore:
    """Score one (prediction, window) pair from arrays; shared by batch and stream."""
    ade = _kernels.ade(horizon, actual, w)
    angle, code = _kernels.chord_angle(anchor[0], anchor[1], actual[w - 1, 0], actual[w - 1, 1],
                                       horizon[w - 1, 0], horizon[w - 1, 1], cfg.degenerate_eps)
    return make_score(track_id, anchor_frame, window_sec, ade, angle, code, cfg, policy)


class ScoreResult(NamedTuple):
    scores: list[AnomalyScore]
    skipped: int


def score_corpus(preds: Iterable[PredictionRecord], trajs: Iterable[Trajectory],
                 windows: Sequence[float], cfg: PipelineConfig,
                 policy: DegeneratePolicy | str = DegeneratePolicy.MAX_DIVERGENCE) -> ScoreResult:
    """Score every prediction at every window whose actual frames exist.

    Pairs lacking observed frames are skipped and counted. Rows come back
    sorted by ``(track_id, anchor_frame, window_sec)`` whatever the input
    order.
    """
    policy = DegeneratePolicy.parse(policy)
    by_id = {t.track_id: t for t in trajs}
    preds = sorted(preds, key=lambda p: p.key)
    windows = sorted(set(float(w) for w in windows))
    if not preds:
        return ScoreResult([], 0)
    horizon = len(preds[0].horizon)
    ws = [window_length(ws_, cfg, horizon) for ws_ in windows]
    w_max = max(ws)

    horizons = np.empty((len(preds), horizon, 2), dtype=np.float64)
    actuals = np.full((len(preds), horizon, 2), np.nan, dtype=np.float64)
    anchors = np.empty((len(preds), 2), dtype=np.float64)
    avail = np.zeros(len(preds), dtype=np.int64)
    for i, p in enumerate(preds):
        if len(p.horizon) != horizon:
            raise TrajAnomalyError("predictions with different horizon lengths")
        horizons[i] = p.horizon
        anchors[i] = p.anchor_pos
        traj = by_id.get(p.track_id)
        if traj is None:
            continue
        j = traj.index_of(p.anchor_frame + 1)
        if j is None:
            continue
        n = 0
        for q in traj.points[j:j + w_max]:
            if q.frame != p.anchor_frame + 1 + n:
                break
            actuals[i, n] = (q.cx, q.cy)
            n += 1
        avail[i] = n

    rows: list[AnomalyScore] = []
    skipped = 0
    for window_sec, w in zip(windows, ws):
        idx = np.flatnonzero(avail >= w)
        skipped += len(preds) - len(idx)
        if not len(idx):
            continue
        h, a, anc = (np.ascontiguousarray(x[idx]) for x in (horizons, actuals, anchors))
        ades = _kernels.ade_batch(h, a, w)
        angles, codes = _kernels.angle_batch(anc, h, a, w, cfg.degenerate_eps)
        for k, i in enumerate(idx.tolist()):
            p = preds[i]
            rows.append(make_score(p.track_id, p.anchor_frame, window_sec, float(ades[k]),
                                   float(angles[k]), int(codes[k]), cfg, policy))
    rows.sort(key=lambda s: s.sort_key)
    return ScoreResult(rows, skipped)


SCORE_COLUMNS = ("track_id", "anchor_frame", "window_sec", "ade", "angle",
                 "ade_flag", "angle_flag", "degenerate")


def _opt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_scores(scores: Iterable[AnomalyScore], path) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for s in scores:
            writer.writerow((s.track_id, s.anchor_frame, repr(float(s.window_sec)), _opt(s.ade),
                             _opt(s.angle), int(s.ade_flag), int(s.angle_flag),
                             int(s.degenerate)))
            n += 1
    return n


def read_scores(path) -> list[AnomalyScore]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORE_COLUMNS:
            raise ParseError(1, f"header must be {','.join(SCORE_COLUMNS)}")
        for row in reader:
            if not row:
                continue
            try:
                tid, anchor, window = int(row[0]), int(row[1]), float(row[2])
                ade = None if row[3] == "" else float(row[3])
                angle = None if row[4] == "" else float(row[4])
                flags = [bool(int(c)) for c in row[5:8]]
            except (ValueError, IndexError) as exc:
                raise ParseError(reader.line_num, str(exc)) from None
            out.append(AnomalyScore(tid, anchor, window, ade, angle, *flags))
    return out
