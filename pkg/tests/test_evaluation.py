import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajanomaly.errors import SingleClassCorpus, TrajAnomalyError
from trajanomaly.evaluation import (aggregate_tracks, auc, eer, eer_from_roc, roc_curve,
                                    trapezoid_area, window_sweep, write_reports)
from trajanomaly.types import DEFAULT_WINDOWS, AnomalyScore


def mann_whitney(pairs):
    pos = [s for s, y in pairs if y == 1]
    neg = [s for s, y in pairs if y == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def roc_oracle(pairs):
    """Brute force: evaluate every candidate threshold independently."""
    n_pos = sum(y for _, y in pairs)
    n_neg = len(pairs) - n_pos
    thresholds = [math.inf] + sorted({s for s, _ in pairs}, reverse=True)
    return [(sum(1 for s, y in pairs if s >= t and y) / n_pos,
             sum(1 for s, y in pairs if s >= t and not y) / n_neg) for t in thresholds]


def eer_oracle(pairs):
    """Bracket the FPR == FNR crossing between consecutive thresholds."""
    pts = roc_oracle(pairs)
    for (t0, f0), (t1, f1) in zip(pts, pts[1:]):
        d0, d1 = f0 - (1 - t0), f1 - (1 - t1)
        if d0 <= 0 <= d1:
            if d1 == d0:
                return f0
            return f0 + (f1 - f0) * (-d0) / (d1 - d0)
    raise AssertionError("no crossing")


labeled = st.lists(st.tuples(st.integers(0, 20).map(float), st.integers(0, 1)), min_size=2,
                   max_size=100).filter(lambda ps: 0 < sum(y for _, y in ps) < len(ps))


@given(pairs=labeled)
def test_roc_matches_brute_force(pairs):
    got = [(p.tpr, p.fpr) for p in roc_curve(pairs)]
    assert got == roc_oracle(pairs)


@given(pairs=labeled)
def test_auc_is_mann_whitney(pairs):
    assert auc(pairs) == pytest.approx(mann_whitney(pairs), abs=1e-12)
    assert trapezoid_area(roc_curve(pairs)) == pytest.approx(auc(pairs), abs=1e-12)


@given(pairs=labeled)
def test_eer_matches_bracketing(pairs):
    assert eer(pairs) == pytest.approx(eer_oracle(pairs), abs=1e-9)


def test_eer_hand_computed():
    # ROC: (0,0) (0,.5) (.5,.5) (.5,1) (1,1); crossing at fpr = fnr = 0.5
    pairs = [(4.0, 1), (3.0, 0), (2.0, 1), (1.0, 0)]
    assert eer(pairs) == 0.5
    assert auc(pairs) == 0.75


def test_perfect_and_inverted():
    pairs = [(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)]
    assert auc(pairs) == 1.0 and eer(pairs) == 0.0
    flipped = [(s, 1 - y) for s, y in pairs]
    assert auc(flipped) == 0.0 and eer(flipped) == 1.0


def test_all_equal_scores_gives_endpoints_only():
    roc = roc_curve([(1.0, 0), (1.0, 1), (1.0, 1)])
    assert [(p.fpr, p.tpr) for p in roc] == [(0.0, 0.0), (1.0, 1.0)]
    assert auc([(1.0, 0), (1.0, 1)]) == 0.5


@given(pairs=labeled)
def test_roc_monotone(pairs):
    roc = roc_curve(pairs)
    assert (roc[0].fpr, roc[0].tpr) == (0.0, 0.0) and (roc[-1].fpr, roc[-1].tpr) == (1.0, 1.0)
    for a, b in zip(roc, roc[1:]):
        assert a.fpr <= b.fpr and a.tpr <= b.tpr


@given(pairs=labeled, seed=st.integers(0, 2**32 - 1))
def test_invariances(pairs, seed):
    base = auc(pairs)
    assert auc([(math.exp(s / 5) * 3 + 1, y) for s, y in pairs]) == base
    assert auc([(s, 1 - y) for s, y in pairs]) == pytest.approx(1 - base, abs=1e-12)
    order = np.random.default_rng(seed).permutation(len(pairs))
    assert auc([pairs[i] for i in order]) == base


def test_random_scores_near_half(rng):
    pairs = list(zip(rng.random(10_000).tolist(), rng.integers(0, 2, 10_000).tolist()))
    assert abs(auc(pairs) - 0.5) < 0.05


def test_single_class_and_nan_rejected():
    with pytest.raises(SingleClassCorpus):
        auc([(1.0, 1), (2.0, 1)])
    with pytest.raises(TrajAnomalyError):
        auc([(math.nan, 1), (2.0, 0)])
    with pytest.raises(TrajAnomalyError):
        auc([(1.0, 2), (2.0, 0)])


def _rows(rng, n_tracks=20):
    rows = []
    for tid in range(1, n_tracks + 1):
        for anchor in (14, 19):
            for w in DEFAULT_WINDOWS:
                rows.append(AnomalyScore(tid, anchor, w, float(rng.uniform(0, 10) + tid % 2),
                                         float(rng.uniform(0, 3))))
    return rows, {tid: tid % 2 for tid in range(1, n_tracks + 1)}


def test_window_sweep_grid(rng, tmp_path):
    rows, labels = _rows(rng)
    reports = window_sweep(rows, labels)
    assert len(reports) == 18
    assert [(r.window_sec, r.method) for r in reports] == [
        (w, m) for w in DEFAULT_WINDOWS for m in ("ade", "angle")]
    assert all(r.n_pos == 10 and r.n_neg == 10 for r in reports)
    assert write_reports(reports, tmp_path / "r.csv") == 18
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "window_sec,method,auc,eer,n_pos,n_neg"


def test_aggregation_max_and_mean():
    rows = [AnomalyScore(1, 14, 1.0, 1.0, 0.1), AnomalyScore(1, 19, 1.0, 3.0, None)]
    assert aggregate_tracks(rows, "ade", "max") == {1.0: {1: 3.0}}
    assert aggregate_tracks(rows, "ade", "mean") == {1.0: {1: 2.0}}
    assert aggregate_tracks(rows, "angle") == {1.0: {1: 0.1}}


def test_single_class_window_can_be_skipped(rng):
    rows, _ = _rows(rng)
    labels = {tid: 0 for tid in range(1, 21)}
    with pytest.raises(SingleClassCorpus):
        window_sweep(rows, labels)
    assert window_sweep(rows, labels, skip_single_class=True) == []


def test_eer_from_roc_interpolates():
    from trajanomaly.evaluation import RocPoint
    roc = [RocPoint(math.inf, 0.0, 0.0), RocPoint(1.0, 0.4, 0.2), RocPoint(0.0, 1.0, 1.0)]
    # d: -1 -> -0.4 -> 1; crossing between the last two at t = 0.4 / 1.4
    assert eer_from_roc(roc) == pytest.approx(0.2 + 0.8 * 0.4 / 1.4)
