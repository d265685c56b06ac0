"""Short-horizon trajectory prediction with a pluggable predictor."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Protocol, runtime_checkable

import numpy as np

from . import _kernels
from .errors import InsufficientHistory
from .types import PipelineConfig, PredictionRecord, Trajectory


@dataclass(frozen=True, eq=False)
class PredictorInput:
    """Observed window handed to a predictor.

    ``absolute`` is ``(T_in, 2)`` pixel positions; ``relative`` is the
    ``(T_in - 1, 2)`` per-step displacement ``absolute[i + 1] - absolute[i]``.
    """

    absolute: np.ndarray
    relative: np.ndarray

    @classmethod
    def from_positions(cls, positions) -> "PredictorInput":
        absolute = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
        absolute.setflags(write=False)
        relative = absolute[1:] - absolute[:-1]
        relative.setflags(write=False)
        return cls(absolute, relative)


@runtime_checkable
class Predictor(Protocol):
    #: False means the pipeline must not call ``predict`` from several threads
    thread_safe: bool

    def predict(self, inp: PredictorInput, horizon: int) -> np.ndarray:
        """Return ``(horizon, 2)`` finite predicted positions."""
        ...


class ConstantVelocityPredictor:
    """Extrapolates the mean per-step displacement of the observed window.

    Stateless, hence safe to share between threads.
    """

    thread_safe = True

    def predict(self, inp: PredictorInput, horizon: int) -> np.ndarray:
        return _kernels.cv_predict(inp.absolute, horizon)


def constant_velocity_predict(inp: PredictorInput, horizon: int) -> np.ndarray:
    return _kernels.cv_predict(inp.absolute, horizon)


def make_input(traj: Trajectory, anchor_frame: int, t_in_samples: int) -> PredictorInput:
    end = traj.index_of(anchor_frame)
    if end is None or end + 1 < t_in_samples:
        raise InsufficientHistory(
            f"track {traj.track_id}: fewer than {t_in_samples} samples up to frame {anchor_frame}")
    start = end + 1 - t_in_samples
    pts = traj.points[start:end + 1]
    if pts[-1].frame - pts[0].frame != t_in_samples - 1:
        raise InsufficientHistory(
            f"track {traj.track_id}: samples before frame {anchor_frame} are not contiguous")
    return PredictorInput.from_positions([(p.cx, p.cy) for p in pts])


def anchor_indices(n_points: int, t_in: int, stride: int) -> range:
    """Point indices (0-based) at which predictions are anchored."""
    return range(t_in - 1, n_points, stride)


def _checked(out, horizon: int, tid: int) -> np.ndarray:
    arr = np.asarray(out, dtype=np.float64)
    if arr.shape != (horizon, 2) or not np.all(np.isfinite(arr)):
        raise ValueError(f"predictor returned an invalid horizon for track {tid}")
    return arr


def to_record(tid: int, anchor_frame: int, anchor, horizon: np.ndarray) -> PredictionRecord:
    return PredictionRecord(tid, anchor_frame, (float(anchor[0]), float(anchor[1])),
                            tuple(map(tuple, horizon.tolist())))


def _predict_track(traj: Trajectory, cfg: PipelineConfig, predictor: Predictor) -> list[PredictionRecord]:
    t_in, horizon = cfg.t_in_samples, cfg.horizon_samples
    out = []
    for i in anchor_indices(len(traj), t_in, cfg.prediction_stride):
        anchor = traj.points[i]
        inp = make_input(traj, anchor.frame, t_in)
        pred = _checked(predictor.predict(inp, horizon), horizon, traj.track_id)
        out.append(to_record(traj.track_id, anchor.frame, (anchor.cx, anchor.cy), pred))
    return out


def issue_predictions(trajs: Iterable[Trajectory], cfg: PipelineConfig,
                      predictor: Predictor | None = None, threads: int = 1) -> list[PredictionRecord]:
    """Predict from every eligible anchor of every (conditioned) track.

    Anchors sit at the ``T_in``-th sample of each track and every
    ``prediction_stride`` samples after it. Output is ordered by
    ``(track_id, anchor_frame)`` regardless of ``threads``.
    """
    predictor = predictor or ConstantVelocityPredictor()
    tracks = sorted(trajs, key=lambda t: t.track_id)
    if threads > 1 and getattr(predictor, "thread_safe", False):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda t: _predict_track(t, cfg, predictor), tracks))
    else:
        chunks = [_predict_track(t, cfg, predictor) for t in tracks]
    return [rec for chunk in chunks for rec in chunk]
