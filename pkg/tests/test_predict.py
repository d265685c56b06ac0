import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajanomaly.errors import InsufficientHistory
from trajanomaly.predict import (ConstantVelocityPredictor, PredictorInput,
                                 constant_velocity_predict, issue_predictions, make_input)
from trajanomaly.types import PipelineConfig, TrackPoint, Trajectory

from .conftest import linear_track


def test_make_input_shapes():
    t = linear_track(1, 21)
    inp = make_input(t, 20, 15)
    assert inp.absolute.shape == (15, 2) and inp.relative.shape == (14, 2)
    assert inp.absolute[-1].tolist() == [100.0, 400.0]
    np.testing.assert_array_equal(inp.relative, inp.absolute[1:] - inp.absolute[:-1])


def test_make_input_stationary_has_zero_steps():
    t = linear_track(1, 15, step=(0.0, 0.0))
    assert not make_input(t, 14, 15).relative.any()


def test_make_input_missing_frame():
    pts = tuple(TrackPoint(f, 0.0, float(f)) for f in range(21) if f != 17)
    with pytest.raises(InsufficientHistory):
        make_input(Trajectory(1, pts), 20, 15)
    with pytest.raises(InsufficientHistory):
        make_input(linear_track(1, 10), 9, 15)


def test_cv_uniform_motion():
    inp = PredictorInput.from_positions([(0, 0), (1, 0), (2, 0)])
    assert constant_velocity_predict(inp, 3).tolist() == [[3, 0], [4, 0], [5, 0]]


def test_cv_stationary():
    inp = PredictorInput.from_positions([(7.5, -2.0)] * 15)
    assert (constant_velocity_predict(inp, 25) == [7.5, -2.0]).all()


def _cv_oracle(pos, h):
    steps = [(b[0] - a[0], b[1] - a[1]) for a, b in zip(pos, pos[1:])]
    mx = math.fsum(s[0] for s in steps) / len(steps)
    my = math.fsum(s[1] for s in steps) / len(steps)
    return [(pos[-1][0] + k * mx, pos[-1][1] + k * my) for k in range(1, h + 1)]


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30), h=st.integers(1, 40))
def test_cv_random_walk_matches_oracle(seed, n, h):
    rng = np.random.default_rng(seed)
    pos = np.cumsum(rng.normal(0, 5, size=(n, 2)), axis=0) + 500
    got = constant_velocity_predict(PredictorInput.from_positions(pos), h)
    want = np.array(_cv_oracle(pos.tolist(), h))
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * 1000)


@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3))
def test_cv_translation_equivariance(seed, a, b):
    pos = np.random.default_rng(seed).uniform(0, 500, size=(15, 2))
    p = ConstantVelocityPredictor()
    base = p.predict(PredictorInput.from_positions(pos), 25)
    shifted = p.predict(PredictorInput.from_positions(pos + [a, b]), 25)
    np.testing.assert_allclose(shifted, base + [a, b], atol=1e-9)


@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(-math.pi, math.pi))
def test_cv_rotation_equivariance_about_last_point(seed, theta):
    pos = np.random.default_rng(seed).uniform(0, 500, size=(15, 2))
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    rotated = (pos - pos[-1]) @ rot.T + pos[-1]
    p = ConstantVelocityPredictor()
    base = p.predict(PredictorInput.from_positions(pos), 25)
    got = p.predict(PredictorInput.from_positions(rotated), 25)
    np.testing.assert_allclose(got, (base - pos[-1]) @ rot.T + pos[-1], atol=1e-8)


@given(x0=st.floats(-500, 500), y0=st.floats(-500, 500), vx=st.floats(-40, 40),
       vy=st.floats(-40, 40))
def test_cv_exact_on_linear_motion(x0, y0, vx, vy):
    pos = [(x0 + i * vx, y0 + i * vy) for i in range(40)]
    got = constant_velocity_predict(PredictorInput.from_positions(pos[:15]), 25)
    np.testing.assert_allclose(got, pos[15:], atol=1e-9)


@pytest.mark.parametrize("n,expected", [(40, 6), (15, 1), (14, 0), (19, 1), (20, 2)])
def test_issue_prediction_counts(n, expected):
    preds = issue_predictions([linear_track(1, n)], PipelineConfig())
    assert len(preds) == expected


def test_issue_predictions_anchor_points():
    t = linear_track(1, 40, first_frame=100)
    preds = issue_predictions([t], PipelineConfig())
    assert [p.anchor_frame for p in preds] == [114, 119, 124, 129, 134, 139]
    assert all(len(p.horizon) == 25 for p in preds)
    assert preds[0].anchor_pos == (t.points[14].cx, t.points[14].cy)


def test_issue_predictions_single_anchor_at_last_point():
    (p,) = issue_predictions([linear_track(3, 15, first_frame=7)], PipelineConfig())
    assert p.anchor_frame == 21


def test_issue_predictions_threads_identical(rng):
    corpus = [linear_track(i, int(rng.integers(10, 80)), start=tuple(rng.uniform(0, 500, 2)),
                           step=tuple(rng.normal(0, 10, 2))) for i in range(1, 30)]
    cfg = PipelineConfig(prediction_stride=1)
    assert issue_predictions(corpus, cfg, threads=1) == issue_predictions(corpus[::-1], cfg, threads=4)


class _Broken:
    thread_safe = False

    def predict(self, inp, horizon):
        return np.full((horizon, 2), np.nan)


def test_invalid_predictor_output_rejected():
    with pytest.raises(ValueError):
        issue_predictions([linear_track(1, 15)], PipelineConfig(), _Broken())
