"""Track CSV and prediction JSONL readers/writers.

Track CSV columns are fixed: ``frame,track_id,class_id,cx,cy,w,h,label``.
Empty ``w``, ``h`` or ``label`` cells mean "absent". Predictions travel as
one JSON object per line::

    {"track_id": 3, "anchor_frame": 40, "anchor": [cx, cy], "horizon": [[cx, cy], ...]}
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (ConflictingLabel, DuplicateFrame, InconsistentHorizon, ParseError,
                     TrajAnomalyError)
from .types import PipelineConfig, PredictionRecord, TrackPoint, Trajectory

TRACK_COLUMNS = ("frame", "track_id", "class_id", "cx", "cy", "w", "h", "label")


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _opt_float(cell: str) -> float | None:
    return None if cell == "" else float(cell)


def iter_track_rows(path: str | Path) -> Iterator[tuple[int, int, TrackPoint, int | None]]:
    """Yield ``(line, track_id, point, label)`` for every data row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACK_COLUMNS:
            raise ParseError(1, f"header must be {','.join(TRACK_COLUMNS)}")
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(TRACK_COLUMNS):
                raise ParseError(line, f"expected {len(TRACK_COLUMNS)} columns, got {len(row)}")
            try:
                frame, tid, cls = int(row[0]), int(row[1]), int(row[2])
                cx, cy = float(row[3]), float(row[4])
                w, h = _opt_float(row[5].strip()), _opt_float(row[6].strip())
                label = None if row[7].strip() == "" else int(row[7])
            except ValueError as exc:
                raise ParseError(line, str(exc)) from None
            if label not in (None, 0, 1):
                raise ParseError(line, f"label must be 0, 1 or blank, got {label}")
            try:
                point = TrackPoint(frame, cx, cy, w, h, cls)
            except TrajAnomalyError as exc:
                raise ParseError(line, str(exc)) from None
            yield line, tid, point, label


def read_tracks(path: str | Path, cfg: PipelineConfig | None = None,
                decimate_from_hz: float | None = None) -> dict[int, Trajectory]:
    """Group a track CSV into trajectories keyed by track id.

    With ``decimate_from_hz`` (e.g. 30 for raw video) every k-th frame of each
    track is kept, ``k = round(decimate_from_hz / cfg.sample_rate_hz)``,
    starting from the track's first frame. Retained frames are renumbered onto
    the output sample grid (``first // k + j``) so that consecutive retained
    samples are one frame apart.
    """
    cfg = cfg or PipelineConfig()
    points: dict[int, dict[int, TrackPoint]] = defaultdict(dict)
    labels: dict[int, int] = {}
    for _, tid, point, label in iter_track_rows(path):
        per = points[tid]
        if point.frame in per:
            raise DuplicateFrame(tid, point.frame)
        per[point.frame] = point
        if label is not None:
            if labels.setdefault(tid, label) != label:
                raise ConflictingLabel(tid)

    k = 1
    if decimate_from_hz is not None:
        k = int(round(decimate_from_hz / cfg.sample_rate_hz))
        if k < 1:
            raise TrajAnomalyError(
                f"cannot decimate {decimate_from_hz} Hz down to {cfg.sample_rate_hz} Hz")

    out: dict[int, Trajectory] = {}
    for tid in sorted(points):
        pts = [points[tid][f] for f in sorted(points[tid])]
        if k > 1:
            first = pts[0].frame
            base = first // k
            pts = [TrackPoint(base + (p.frame - first) // k, p.cx, p.cy, p.w, p.h, p.class_id)
                   for p in pts if (p.frame - first) % k == 0]
        out[tid] = Trajectory(tid, tuple(pts), cfg.sample_rate_hz, labels.get(tid))
    return out


def write_tracks(trajs: Iterable[Trajectory], path: str | Path) -> int:
    rows = []
    for t in trajs:
        label = "" if t.label is None else str(t.label)
        for p in t.points:
            rows.append((p.frame, t.track_id, p.class_id, p, label))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACK_COLUMNS)
        for frame, tid, cls, p, label in rows:
            writer.writerow((frame, tid, cls, repr(float(p.cx)), repr(float(p.cy)),
                             _fmt(p.w), _fmt(p.h), label))
    return len(rows)


def iter_frames(path: str | Path) -> Iterator[tuple[int, list[tuple[int, TrackPoint]]]]:
    """Replay a frame-sorted track CSV as ``(frame, [(track_id, point), ...])`` batches."""
    batch: list[tuple[int, TrackPoint]] = []
    current = None
    for _, tid, point, _label in iter_track_rows(path):
        if current is not None and point.frame != current:
            yield current, batch
            batch = []
        current = point.frame
        batch.append((tid, point))
    if current is not None:
        yield current, batch


def frames_from_tracks(trajs: Iterable[Trajectory]) -> list[tuple[int, list[tuple[int, TrackPoint]]]]:
    """Turn trajectories into per-frame detection batches ordered by (frame, track id)."""
    by_frame: dict[int, list[tuple[int, TrackPoint]]] = defaultdict(list)
    for t in trajs:
        for p in t.points:
            by_frame[p.frame].append((t.track_id, p))
    return [(f, sorted(by_frame[f], key=lambda r: r[0])) for f in sorted(by_frame)]


# ---------------------------------------------------------------------------
# predictions


def prediction_to_json(rec: PredictionRecord) -> str:
    return json.dumps({
        "track_id": rec.track_id,
        "anchor_frame": rec.anchor_frame,
        "anchor": list(rec.anchor_pos),
        "horizon": [list(p) for p in rec.horizon],
    })


def write_predictions(records: Iterable[PredictionRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(prediction_to_json(rec) + "\n")
            n += 1
    return n


def read_external_predictions(path: str | Path) -> dict[tuple[int, int], PredictionRecord]:
    """Load line-delimited prediction records keyed by ``(track_id, anchor_frame)``."""
    out: dict[tuple[int, int], PredictionRecord] = {}
    horizon_len = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = PredictionRecord(
                    int(obj["track_id"]),
                    int(obj["anchor_frame"]),
                    (float(obj["anchor"][0]), float(obj["anchor"][1])),
                    tuple((float(x), float(y)) for x, y in obj["horizon"]),
                )
            except (ValueError, KeyError, TypeError, IndexError, TrajAnomalyError) as exc:
                raise ParseError(lineno, f"bad prediction record ({exc})") from None
            if horizon_len is None:
                horizon_len = len(rec.horizon)
            elif len(rec.horizon) != horizon_len:
                raise InconsistentHorizon(
                    f"line {lineno}: horizon of {len(rec.horizon)} points, expected {horizon_len}")
            if rec.key in out:
                raise ParseError(lineno, f"duplicate prediction for {rec.key}")
            out[rec.key] = rec
    return out
