"""Vehicle-trajectory anomaly detection from short-horizon prediction.

Tracks are conditioned, extrapolated, and scored against what the vehicle
actually did, both offline over corpora and online over a frame stream.
"""

from ._kernels import BACKEND
from .anomaly import DegeneratePolicy, ade_score, angle_score, flag, score_corpus
from .condition import IdAllocator, condition, fill_gaps
from .errors import TrajAnomalyError
from .evaluation import EvalReport, auc, eer, roc_curve, window_sweep
from .pipeline import batch_scores, bench, buffer_time, run_stream
from .predict import ConstantVelocityPredictor, PredictorInput, issue_predictions, make_input
from .synthgen import AnomalySpec, SceneSpec, gen_normal, inject
from .types import (AnomalyScore, PipelineConfig, PredictionRecord, TrackPoint, Trajectory,
                    validate_config)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AnomalyScore", "AnomalySpec", "ConstantVelocityPredictor", "DegeneratePolicy",
    "EvalReport", "IdAllocator", "PipelineConfig", "PredictionRecord", "PredictorInput",
    "SceneSpec", "TrackPoint", "TrajAnomalyError", "Trajectory", "ade_score", "angle_score",
    "auc", "batch_scores", "bench", "buffer_time", "condition", "eer", "fill_gaps", "flag",
    "gen_normal", "inject", "issue_predictions", "make_input", "roc_curve", "run_stream",
    "score_corpus", "validate_config", "window_sweep",
]
