"""ROC, AUC and EER over labeled scores, swept across detection windows.

Higher scores mean "more anomalous"; label 1 is the positive class.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import SingleClassCorpus, TrajAnomalyError
from .types import AnomalyScore

METHODS = ("ade", "angle")


@dataclass(frozen=True, slots=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class EvalReport:
    window_sec: float
    method: str
    roc: tuple[RocPoint, ...]
    auc: float
    eer: float
    n_pos: int
    n_neg: int


def _prepare(scores: Iterable[tuple[float, int]]) -> list[tuple[float, int]]:
    pairs = []
    for value, label in scores:
        value = float(value)
        if math.isnan(value):
            raise TrajAnomalyError("NaN score")
        if label not in (0, 1):
            raise TrajAnomalyError(f"label must be 0 or 1, got {label!r}")
        pairs.append((value, int(label)))
    n_pos = sum(lbl for _, lbl in pairs)
    if n_pos == 0 or n_pos == len(pairs):
        raise SingleClassCorpus("ROC needs at least one positive and one negative score")
    return pairs


def _counts(pairs: list[tuple[float, int]]) -> tuple[list[tuple[float, int, int]], int, int]:
    """Cumulative (threshold, tp, fp) for 'score >= threshold', thresholds descending."""
    pairs = sorted(pairs, key=lambda p: -p[0])
    n_pos = sum(lbl for _, lbl in pairs)
    n_neg = len(pairs) - n_pos
    out = [(math.inf, 0, 0)]
    tp = fp = 0
    i = 0
    while i < len(pairs):
        value = pairs[i][0]
        while i < len(pairs) and pairs[i][0] == value:
            if pairs[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        out.append((value, tp, fp))
    return out, n_pos, n_neg


def roc_curve(scores: Iterable[tuple[float, int]]) -> list[RocPoint]:
    """ROC points ordered by ascending FPR, one per distinct score.

    The ``+inf`` sentinel contributes the (0, 0) corner; the lowest distinct
    score already reaches (1, 1), so a ``-inf`` point would repeat it and is
    omitted. Equal scores share one threshold.
    """
    counts, n_pos, n_neg = _counts(_prepare(scores))
    return [RocPoint(t, tp / n_pos, fp / n_neg) for t, tp, fp in counts]


def auc(scores: Iterable[tuple[float, int]]) -> float:
    """Trapezoid area under the ROC, evaluated in exact integer arithmetic.

    Identical to the Mann-Whitney statistic with half credit for ties.
    """
    counts, n_pos, n_neg = _counts(_prepare(scores))
    twice_area = 0
    for (_, tp0, fp0), (_, tp1, fp1) in zip(counts, counts[1:]):
        twice_area += (fp1 - fp0) * (tp1 + tp0)
    return twice_area / (2 * n_pos * n_neg)


def trapezoid_area(roc: Sequence[RocPoint]) -> float:
    return sum((b.fpr - a.fpr) * (a.tpr + b.tpr) / 2 for a, b in zip(roc, roc[1:]))


def eer_from_roc(roc: Sequence[RocPoint]) -> float:
    """Rate where FPR equals FNR, interpolated along the ROC polyline."""
    prev = None
    for p in roc:
        d = p.fpr - (1.0 - p.tpr)
        if d == 0.0:
            return p.fpr
        if d > 0.0:
            if prev is None:
                return p.fpr
            q, dq = prev
            t = -dq / (d - dq)
            return q.fpr + t * (p.fpr - q.fpr)
        prev = (p, d)
    return roc[-1].fpr


def eer(scores: Iterable[tuple[float, int]]) -> float:
    return eer_from_roc(roc_curve(scores))


def aggregate_tracks(rows: Iterable[AnomalyScore], method: str,
                     how: str = "max") -> dict[float, dict[int, float]]:
    """Per-window, per-track score (max or mean over that track's predictions)."""
    if method not in METHODS:
        raise TrajAnomalyError(f"unknown method {method!r}")
    if how not in ("max", "mean"):
        raise TrajAnomalyError(f"unknown aggregation {how!r}")
    acc: dict[float, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        v = r.ade if method == "ade" else r.angle
        if v is not None:
            acc[r.window_sec][r.track_id].append(v)
    out: dict[float, dict[int, float]] = {}
    for window, tracks in acc.items():
        if how == "max":
            out[window] = {tid: max(vs) for tid, vs in tracks.items()}
        else:
            out[window] = {tid: math.fsum(vs) / len(vs) for tid, vs in tracks.items()}
    return out


def evaluate_cell(track_scores: Mapping[int, float], labels: Mapping[int, int],
                  window_sec: float, method: str) -> EvalReport:
    pairs = [(track_scores[tid], labels[tid]) for tid in sorted(track_scores) if tid in labels]
    try:
        roc = roc_curve(pairs)
    except SingleClassCorpus as exc:
        raise SingleClassCorpus(f"window {window_sec} s, method {method}: {exc}") from None
    n_pos = sum(lbl for _, lbl in pairs)
    return EvalReport(window_sec, method, tuple(roc), auc(pairs), eer_from_roc(roc),
                      n_pos, len(pairs) - n_pos)


def window_sweep(rows: Iterable[AnomalyScore], labels: Mapping[int, int],
                 windows: Sequence[float] | None = None,
                 methods: Sequence[str] = METHODS, aggregate: str = "max",
                 skip_single_class: bool = False) -> list[EvalReport]:
    """One report per (window, method), windows ascending, methods in given order.

    A track's score at a window aggregates all its predictions (``max`` by
    default: a track is anomalous if any prediction is). Tracks without a
    label are ignored.
    """
    rows = list(rows)
    if windows is None:
        windows = sorted({r.window_sec for r in rows})
    reports = []
    per_method = {m: aggregate_tracks(rows, m, aggregate) for m in methods}
    for window in sorted(float(w) for w in windows):
        for m in methods:
            cell = per_method[m].get(window, {})
            try:
                reports.append(evaluate_cell(cell, labels, window, m))
            except SingleClassCorpus:
                if not skip_single_class:
                    raise
    return reports


REPORT_COLUMNS = ("window_sec", "method", "auc", "eer", "n_pos", "n_neg")


def write_reports(reports: Iterable[EvalReport], path: str | Path) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow((repr(r.window_sec), r.method, repr(r.auc), repr(r.eer), r.n_pos, r.n_neg))
            n += 1
    return n


def write_roc(report: EvalReport, path: str | Path) -> None:
    """Plot-ready series for one cell: threshold, fpr, tpr, fnr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("threshold", "fpr", "tpr", "fnr"))
        for p in report.roc:
            writer.writerow((repr(p.threshold), repr(p.fpr), repr(p.tpr), repr(1.0 - p.tpr)))
