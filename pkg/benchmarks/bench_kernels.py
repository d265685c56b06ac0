"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--n 20000] [--density 140]

Part 1 times the raw kernels on identical random batches and checks the
outputs are bit-identical. Part 2 runs the end-to-end ``bench`` command
once per backend in a subprocess (the backend is picked at import).
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from trajanomaly._kernels import compiled, pure


def best_of(fn, repeat=5):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kernel_table(n: int) -> None:
    rng = np.random.default_rng(0)
    hist = np.cumsum(rng.normal(0, 5, size=(n, 15, 2)), axis=1)
    preds = rng.normal(0, 100, size=(n, 25, 2))
    acts = rng.normal(0, 100, size=(n, 25, 2))
    anchors = rng.normal(0, 100, size=(n, 2))
    cases = {
        "cv_predict": lambda m: [m.cv_predict(hist[i], 25) for i in range(n)],
        "ade_batch": lambda m: m.ade_batch(preds, acts, 10),
        "angle_batch": lambda m: m.angle_batch(anchors, preds, acts, 10, 1e-6)[0],
    }
    print(f"kernels, {n} items (best of 5)")
    print(f"{'kernel':<12} {'python ms':>10} {'cython ms':>10} {'speedup':>8}  identical")
    for name, run in cases.items():
        tp, outp = best_of(lambda: run(pure))
        if compiled is None:
            print(f"{name:<12} {tp * 1e3:10.2f} {'-':>10} {'-':>8}  -")
            continue
        tc, outc = best_of(lambda: run(compiled))
        same = np.array_equal(np.asarray(outp), np.asarray(outc))
        print(f"{name:<12} {tp * 1e3:10.2f} {tc * 1e3:10.2f} {tp / tc:7.1f}x  {same}")


def stream_table(density: float, duration: float) -> None:
    print(f"\nrun_stream, {density:g} vehicles/s for {duration:g} s (median of 3)")
    for label, env in (("python", {"TRAJANOMALY_PURE_PYTHON": "1"}), ("cython", {})):
        if label == "cython" and compiled is None:
            print("cython   not built")
            continue
        with tempfile.TemporaryDirectory() as d:
            out = Path(d) / "bench.json"
            cmd = [sys.executable, "-m", "trajanomaly", "bench", "--vehicles-per-s", str(density),
                   "--duration", str(duration), "--repetitions", "3", "--out", str(out)]
            subprocess.run(cmd, check=True, env={**os.environ, **env}, stdout=subprocess.DEVNULL)
            r = json.loads(out.read_text())
        print(f"{label:<8} {r['trajectories_per_s']:10.0f} trajectories/s "
              f"({r['predictions']} predictions in {r['wall_time_s']:.2f} s)")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--density", type=float, default=140.0)
    ap.add_argument("--duration", type=float, default=30.0)
    args = ap.parse_args()
    kernel_table(args.n)
    stream_table(args.density, args.duration)


if __name__ == "__main__":
    main()
