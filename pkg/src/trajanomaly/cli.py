"""Command-line entry point: ``trajanomaly <subcommand> ...``.

Exit status: 0 on success, 1 on a domain error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Sequence

from . import _kernels
from .anomaly import DegeneratePolicy, read_scores, score_corpus, write_scores
from .condition import condition
from .errors import TrajAnomalyError
from .evaluation import window_sweep, write_reports, write_roc
from .ingest import (iter_frames, frames_from_tracks, read_external_predictions, read_tracks,
                     write_predictions, write_tracks)
from .pipeline import (DEFAULT_LEAD_S, DEFAULT_SPEED_MPS, MPH_TO_MPS, bench, buffer_time,
                       run_stream)
from .predict import ConstantVelocityPredictor, issue_predictions
from .synthgen import ANOMALY_KINDS, anomaly_from_kv, make_corpus, scene_from_kv
from .types import (DEFAULT_WINDOWS, PipelineConfig, config_from_kv, label_map, read_kv,
                    validate_config)


def _windows(text: str) -> list[float]:
    try:
        out = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty window list")
    return out


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _common(p: argparse.ArgumentParser, windows: bool = False, policy: bool = False) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads (1 is the bit-exact reference)")
    p.add_argument("--sample-rate", type=float, dest="sample_rate_hz",
                   help="samples per second after decimation")
    p.add_argument("--stride", type=int, dest="prediction_stride",
                   help="frames between successive predictions of one track")
    p.add_argument("--ade-threshold", type=float, dest="ade_threshold", help="pixels")
    p.add_argument("--angle-threshold", type=float, dest="angle_threshold", help="radians")
    if windows:
        p.add_argument("--windows", type=_windows, default=list(DEFAULT_WINDOWS),
                       help="comma-separated detection windows in seconds")
    if policy:
        p.add_argument("--policy", choices=[m.value for m in DegeneratePolicy],
                       default=DegeneratePolicy.MAX_DIVERGENCE.value,
                       help="angle score for zero-length chords")


def _kv(args) -> dict[str, str]:
    return read_kv(args.config) if getattr(args, "config", None) else {}


def _cfg(args) -> PipelineConfig:
    cfg = config_from_kv(_kv(args), strict=False)
    overrides = {k: getattr(args, k, None) for k in
                 ("sample_rate_hz", "prediction_stride", "ade_threshold", "angle_threshold")}
    return validate_config(replace(cfg, **{k: v for k, v in overrides.items() if v is not None}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajanomaly",
        description="Trajectory-prediction based vehicle anomaly detection.")
    parser.add_argument("--backend-info", action="store_true",
                        help="print the active kernel backend and exit")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    p = sub.add_parser("synth", help="generate a labeled synthetic track CSV")
    _common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, help="scene seed (overrides config)")
    p.add_argument("--inject-seed", type=int)
    p.add_argument("--duration", type=float, help="scene length in seconds")
    p.add_argument("--vehicles-per-s", type=float)
    p.add_argument("--noise", type=float, help="positional noise std in pixels")
    p.add_argument("--kind", choices=ANOMALY_KINDS)
    p.add_argument("--fraction", type=float, help="share of tracks made anomalous")
    p.add_argument("--severity", type=float)
    p.add_argument("--onset", type=float, help="seconds into a track")

    p = sub.add_parser("condition", help="filter, gap-fill and validate tracks")
    _common(p)
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--decimate-from", type=float, help="input frame rate to decimate from")

    p = sub.add_parser("predict", help="constant-velocity predictions as JSONL")
    _common(p)
    p.add_argument("--in", dest="inp", type=Path, required=True, help="conditioned track CSV")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("score", help="ADE and angle scores per prediction and window")
    _common(p, windows=True, policy=True)
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--preds", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("eval", help="AUC/EER per window and method")
    _common(p, windows=False)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--tracks", type=Path, required=True, help="labeled track CSV")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--aggregate", choices=("max", "mean"), default="max")
    p.add_argument("--roc-dir", type=Path, help="write one ROC series CSV per cell here")
    p.add_argument("--skip-single-class", action="store_true")

    p = sub.add_parser("pipeline", help="replay a track CSV as a stream; alerts as JSONL on stdout")
    _common(p, windows=True, policy=True)
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--decimate-from", type=float)
    p.add_argument("--scores-out", type=Path)
    p.add_argument("--report-out", type=Path, help="throughput report JSON")

    p = sub.add_parser("bench", help="throughput on generated traffic")
    _common(p, windows=True)
    p.add_argument("--repetitions", type=_positive_int, default=3)
    p.add_argument("--duration", type=float)
    p.add_argument("--vehicles-per-s", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="write report (.json or .csv)")

    p = sub.add_parser("buffer", help="work-zone buffer time and distance")
    p.add_argument("--window", type=float, required=True, help="detection window in seconds")
    p.add_argument("--lead", type=float, default=DEFAULT_LEAD_S, help="total lead time in seconds")
    speed = p.add_mutually_exclusive_group()
    speed.add_argument("--speed-mph", type=float)
    speed.add_argument("--speed-mps", type=float)
    return parser


def _scene(args):
    kv = _kv(args)
    scene = scene_from_kv(kv)
    updates = {"seed": args.seed, "duration_s": args.duration,
               "vehicles_per_s": args.vehicles_per_s,
               "noise_px": getattr(args, "noise", None),
               "sample_rate_hz": getattr(args, "sample_rate_hz", None)}
    return replace(scene, **{k: v for k, v in updates.items() if v is not None}).validate(), kv


def cmd_synth(args) -> int:
    scene, kv = _scene(args)
    anomaly = anomaly_from_kv(kv)
    updates = {"kind": args.kind, "fraction": args.fraction, "severity": args.severity,
               "onset_s": args.onset}
    anomaly = replace(anomaly, **{k: v for k, v in updates.items() if v is not None}).validate()
    corpus = make_corpus(scene, anomaly, args.inject_seed)
    n = write_tracks(corpus, args.out)
    print(f"wrote {len(corpus)} tracks, {n} rows to {args.out}", file=sys.stderr)
    return 0


def cmd_condition(args) -> int:
    cfg = _cfg(args)
    trajs = read_tracks(args.inp, cfg, args.decimate_from)
    out = condition(trajs.values(), cfg)
    n = write_tracks(out, args.out)
    print(f"kept {len(out)} of {len(trajs)} tracks, {n} rows", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    cfg = _cfg(args)
    trajs = read_tracks(args.inp, cfg)
    preds = issue_predictions(trajs.values(), cfg, ConstantVelocityPredictor(), threads=args.threads)
    write_predictions(preds, args.out)
    print(f"wrote {len(preds)} predictions", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    cfg = _cfg(args)
    trajs = read_tracks(args.tracks, cfg)
    preds = read_external_predictions(args.preds)
    result = score_corpus(preds.values(), trajs.values(), args.windows, cfg, args.policy)
    write_scores(result.scores, args.out)
    print(f"wrote {len(result.scores)} score rows, skipped {result.skipped} "
          f"(prediction, window) pairs without observed frames", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg = _cfg(args)
    rows = read_scores(args.scores)
    labels = label_map(read_tracks(args.tracks, cfg).values())
    reports = window_sweep(rows, labels, aggregate=args.aggregate,
                           skip_single_class=args.skip_single_class)
    write_reports(reports, args.out)
    if args.roc_dir:
        args.roc_dir.mkdir(parents=True, exist_ok=True)
        for r in reports:
            write_roc(r, args.roc_dir / f"roc_{r.method}_{r.window_sec:g}s.csv")
    for r in reports:
        print(f"{r.window_sec:>4g}s {r.method:<5} auc={r.auc:.4f} eer={r.eer:.4f}", file=sys.stderr)
    return 0


def cmd_pipeline(args) -> int:
    cfg = _cfg(args)
    if args.decimate_from:
        frames = frames_from_tracks(read_tracks(args.inp, cfg, args.decimate_from).values())
    else:
        frames = iter_frames(args.inp)
    result = run_stream(frames, cfg, ConstantVelocityPredictor(), args.policy, args.windows,
                        threads=args.threads)
    out = sys.stdout
    for a in result.alerts:
        out.write(json.dumps(asdict(a)) + "\n")
    if args.scores_out:
        write_scores(result.scores, args.scores_out)
    if args.report_out:
        args.report_out.write_text(json.dumps(asdict(result.report), indent=2) + "\n")
    r = result.report
    print(f"{r.frames} frames, {r.predictions} predictions, {len(result.alerts)} alerts, "
          f"{r.trajectories_per_s:.0f} trajectories/s", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    cfg = _cfg(args)
    scene, _ = _scene(args)
    rep = bench(scene, cfg, ConstantVelocityPredictor(), args.repetitions, args.threads, args.windows)
    data = rep.as_dict()
    data["backend"] = _kernels.BACKEND
    if args.out:
        if args.out.suffix.lower() == ".csv":
            keys = list(data)
            args.out.write_text(",".join(keys) + "\n" + ",".join(str(data[k]) for k in keys) + "\n")
        else:
            args.out.write_text(json.dumps(data, indent=2) + "\n")
    print(json.dumps(data, indent=2))
    return 0


def cmd_buffer(args) -> int:
    speed = DEFAULT_SPEED_MPS
    if args.speed_mph is not None:
        speed = args.speed_mph * MPH_TO_MPS
    elif args.speed_mps is not None:
        speed = args.speed_mps
    buf, dist = buffer_time(args.window, args.lead, speed)
    print(f"window {args.window:g} s: buffer {buf:.1f} s, distance {dist:.1f} m")
    return 0


COMMANDS = {
    "synth": cmd_synth, "condition": cmd_condition, "predict": cmd_predict, "score": cmd_score,
    "eval": cmd_eval, "pipeline": cmd_pipeline, "bench": cmd_bench, "buffer": cmd_buffer,
}


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.backend_info:
        print(_kernels.BACKEND)
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader (e.g. head) went away; silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        return 0
    except (TrajAnomalyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
