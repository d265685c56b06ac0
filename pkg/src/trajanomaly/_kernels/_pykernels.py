"""Pure-Python twins of the compiled kernels.

Loops are scalar and ordered exactly like the Cython code so results match
bit for bit. Used when the extension is not built or when
``TRAJANOMALY_PURE_PYTHON=1``.
"""

from __future__ import annotations

import math

import numpy as np


def cv_predict(absolute, horizon: int) -> np.ndarray:
    pts = np.asarray(absolute, dtype=np.float64).tolist()
    n = len(pts)
    if n < 1:
        raise ValueError("need at least one observed position")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    sx = sy = 0.0
    for i in range(n - 1):
        sx = sx + (pts[i + 1][0] - pts[i][0])
        sy = sy + (pts[i + 1][1] - pts[i][1])
    vx = vy = 0.0
    if n > 1:
        vx = sx / float(n - 1)
        vy = sy / float(n - 1)
    lx, ly = pts[-1]
    out = [(lx + float(k) * vx, ly + float(k) * vy) for k in range(1, horizon + 1)]
    return np.array(out, dtype=np.float64)


def _ade(pred: list, actual: list, w: int) -> float:
    s = 0.0
    for k in range(w):
        dx = pred[k][0] - actual[k][0]
        dy = pred[k][1] - actual[k][1]
        s = s + math.sqrt(dx * dx + dy * dy)
    return s / float(w)


def ade(pred, actual, w: int) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if w < 1 or w > len(pred) or w > len(actual):
        raise ValueError("window out of range")
    return _ade(pred[:w].tolist(), actual[:w].tolist(), w)


def chord_angle(ax, ay, px, py, fx, fy, eps):
    """Angle between chords anchor->actual and anchor->predicted.

    Returns ``(angle, code)`` with ``code`` the number of chords shorter
    than ``eps``; ``angle`` is 0.0 whenever ``code`` is non-zero.
    """
    dpx = px - ax
    dpy = py - ay
    dfx = fx - ax
    dfy = fy - ay
    npn = math.sqrt(dpx * dpx + dpy * dpy)
    nfn = math.sqrt(dfx * dfx + dfy * dfy)
    code = int(npn < eps) + int(nfn < eps)
    if code:
        return 0.0, code
    # arccos(dot / (|P||F|)) computed as atan2 so nearly (anti)parallel
    # chords keep full precision; no domain clamp is needed
    return math.atan2(abs(dpx * dfy - dpy * dfx), dpx * dfx + dpy * dfy), 0


def ade_batch(preds, actuals, w: int) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    if len(actuals) != len(preds):
        raise ValueError("batch size mismatch")
    if len(preds) and (w < 1 or w > preds.shape[1] or w > actuals.shape[1]):
        raise ValueError("window out of range")
    p = preds[:, :w].tolist()
    a = actuals[:, :w].tolist()
    return np.array([_ade(pi, ai, w) for pi, ai in zip(p, a)], dtype=np.float64)


def angle_batch(anchors, preds, actuals, w: int, eps: float):
    anchors = np.asarray(anchors, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    if len(actuals) != len(preds) or len(anchors) != len(preds):
        raise ValueError("batch size mismatch")
    n = len(preds)
    if n and (w < 1 or w > preds.shape[1] or w > actuals.shape[1]):
        raise ValueError("window out of range")
    out = np.empty(n, dtype=np.float64)
    codes = np.empty(n, dtype=np.int8)
    if not n:
        return out, codes
    anc = anchors.tolist()
    p_end = preds[:, w - 1].tolist()
    a_end = actuals[:, w - 1].tolist()
    for i in range(n):
        out[i], codes[i] = chord_angle(anc[i][0], anc[i][1], a_end[i][0], a_end[i][1],
                                       p_end[i][0], p_end[i][1], eps)
    return out, codes
