import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajanomaly.errors import (ConflictingLabel, DuplicateFrame, InconsistentHorizon,
                                ParseError)
from trajanomaly.ingest import (TRACK_COLUMNS, frames_from_tracks, iter_frames,
                                read_external_predictions, read_tracks, write_predictions,
                                write_tracks)
from trajanomaly.types import PipelineConfig, PredictionRecord

from .conftest import linear_track, random_corpus

HEADER = ",".join(TRACK_COLUMNS) + "\n"


def test_two_tracks_twenty_rows(tmp_path):
    trajs = [linear_track(1, 20), linear_track(2, 20, start=(300.0, 5.0))]
    path = tmp_path / "t.csv"
    assert write_tracks(trajs, path) == 40
    got = read_tracks(path)
    assert sorted(got) == [1, 2]
    assert all(len(t) == 20 for t in got.values())


def test_empty_collection_writes_header_only(tmp_path):
    path = tmp_path / "e.csv"
    assert write_tracks([], path) == 0
    assert path.read_text() == HEADER
    assert read_tracks(path) == {}


def test_one_trajectory_fifteen_rows(tmp_path):
    path = tmp_path / "t.csv"
    assert write_tracks([linear_track(7, 15)], path) == 15


def test_rows_sorted_by_frame_then_id(tmp_path):
    path = tmp_path / "t.csv"
    write_tracks([linear_track(9, 3), linear_track(2, 3)], path)
    keys = [tuple(map(int, line.split(",")[:2])) for line in path.read_text().splitlines()[1:]]
    assert keys == sorted(keys)


def test_decimate_30_to_5_keeps_every_sixth(tmp_path):
    path = tmp_path / "raw.csv"
    write_tracks([linear_track(1, 60, first_frame=3), linear_track(2, 31, first_frame=0)], path)
    got = read_tracks(path, PipelineConfig(sample_rate_hz=5.0), decimate_from_hz=30.0)
    t1 = got[1]
    assert [p.cy for p in t1.points] == [20.0 * i for i in range(0, 60, 6)]
    assert t1.is_contiguous()
    # first frame of every track survives decimation
    assert t1.points[0].cy == 0.0 and got[2].points[0].cy == 0.0
    assert len(got[2]) == 6


def test_duplicate_frame_rejected(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text(HEADER + "0,1,2,1.0,2.0,,,\n0,1,2,1.5,2.5,,,\n")
    with pytest.raises(DuplicateFrame):
        read_tracks(path)


def test_conflicting_label_rejected(tmp_path):
    path = tmp_path / "l.csv"
    path.write_text(HEADER + "0,1,2,1.0,2.0,,,0\n1,1,2,1.0,3.0,,,1\n")
    with pytest.raises(ConflictingLabel):
        read_tracks(path)


def test_any_labeled_row_labels_track(tmp_path):
    path = tmp_path / "l.csv"
    path.write_text(HEADER + "0,1,2,1.0,2.0,,,\n1,1,2,1.0,3.0,,,1\n")
    assert read_tracks(path)[1].label == 1


@pytest.mark.parametrize("body,line", [
    ("0,1,2,abc,2.0,,,\n", 2),
    ("0,1,2,1.0\n", 2),
    ("0,1,2,1.0,2.0,,,\n0,1,2,1.0,2.0,,,7\n", 3),
])
def test_parse_errors_carry_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(HEADER + body)
    with pytest.raises(ParseError) as exc:
        read_tracks(path)
    assert exc.value.line == line


def test_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0,1,2,1.0,2.0,,,\n")
    with pytest.raises(ParseError):
        read_tracks(path)


@given(seed=st.integers(0, 2**32 - 1))
def test_track_round_trip_random_corpus(tmp_path_factory, seed):
    corpus = random_corpus(np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    write_tracks(corpus, path)
    assert read_tracks(path) == {t.track_id: t for t in corpus}


def test_iter_frames_matches_frames_from_tracks(tmp_path, rng):
    corpus = random_corpus(rng)
    path = tmp_path / "c.csv"
    write_tracks(corpus, path)
    streamed = [(f, list(b)) for f, b in iter_frames(path)]
    assert streamed == frames_from_tracks(corpus)


def _record(tid, anchor, h, rng):
    return PredictionRecord(tid, anchor, tuple(rng.normal(size=2).tolist()),
                            tuple(map(tuple, rng.normal(size=(h, 2)).tolist())))


def test_single_prediction_record(tmp_path, rng):
    path = tmp_path / "p.jsonl"
    rec = _record(3, 40, 25, rng)
    write_predictions([rec], path)
    got = read_external_predictions(path)
    assert list(got) == [(3, 40)]
    assert len(got[(3, 40)].horizon) == 25


def test_inconsistent_horizon(tmp_path, rng):
    path = tmp_path / "p.jsonl"
    write_predictions([_record(1, 20, 25, rng), _record(2, 20, 24, rng)], path)
    with pytest.raises(InconsistentHorizon):
        read_external_predictions(path)


def test_bad_prediction_line(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"track_id": 1, "anchor_frame": 2}\n')
    with pytest.raises(ParseError):
        read_external_predictions(path)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 12), h=st.integers(1, 30))
def test_prediction_round_trip(tmp_path_factory, seed, n, h):
    rng = np.random.default_rng(seed)
    recs = {}
    for i in range(n):
        r = _record(int(rng.integers(0, 50)), i * 5, h, rng)
        recs[r.key] = r
    path = tmp_path_factory.mktemp("p") / "p.jsonl"
    write_predictions(recs.values(), path)
    assert read_external_predictions(path) == recs
