# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scoring and extrapolation kernels.

Arithmetic order mirrors ``_pykernels`` term for term so both backends agree
bit for bit on IEEE-754 hardware (no fast-math, no FMA contraction).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, fabs

cnp.import_array()


cpdef cnp.ndarray cv_predict(const double[:, ::1] absolute, Py_ssize_t horizon):
    cdef Py_ssize_t n = absolute.shape[0]
    cdef Py_ssize_t i, k
    cdef double sx = 0.0, sy = 0.0, vx = 0.0, vy = 0.0, lx, ly
    if n < 1:
        raise ValueError("need at least one observed position")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    out = np.empty((horizon, 2), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n - 1):
            sx = sx + (absolute[i + 1, 0] - absolute[i, 0])
            sy = sy + (absolute[i + 1, 1] - absolute[i, 1])
        if n > 1:
            vx = sx / <double>(n - 1)
            vy = sy / <double>(n - 1)
        lx = absolute[n - 1, 0]
        ly = absolute[n - 1, 1]
        for k in range(horizon):
            o[k, 0] = lx + <double>(k + 1) * vx
            o[k, 1] = ly + <double>(k + 1) * vy
    return out


cdef inline double _ade(const double[:, ::1] pred, const double[:, ::1] actual,
                        Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, dx, dy
    for k in range(w):
        dx = pred[k, 0] - actual[k, 0]
        dy = pred[k, 1] - actual[k, 1]
        s = s + sqrt(dx * dx + dy * dy)
    return s / <double>w


cpdef double ade(const double[:, ::1] pred, const double[:, ::1] actual, Py_ssize_t w):
    if w < 1 or w > pred.shape[0] or w > actual.shape[0]:
        raise ValueError("window out of range")
    return _ade(pred, actual, w)


cdef inline int _angle(double ax, double ay, double px, double py, double fx, double fy,
                       double eps, double* out) noexcept nogil:
    cdef double dpx = px - ax, dpy = py - ay
    cdef double dfx = fx - ax, dfy = fy - ay
    cdef double npn = sqrt(dpx * dpx + dpy * dpy)
    cdef double nfn = sqrt(dfx * dfx + dfy * dfy)
    cdef int code = (npn < eps) + (nfn < eps)
    if code:
        out[0] = 0.0
        return code
    # arccos of the normalized dot product, in the form that stays accurate
    # for nearly (anti)parallel chords; the result lies in [0, pi]
    out[0] = atan2(fabs(dpx * dfy - dpy * dfx), dpx * dfx + dpy * dfy)
    return 0


def chord_angle(double ax, double ay, double px, double py, double fx, double fy, double eps):
    """Angle between chords anchor->actual and anchor->predicted.

    Returns ``(angle, code)``; ``code`` counts chords shorter than ``eps``
    (0, 1 or 2) and ``angle`` is 0.0 whenever ``code`` is non-zero.
    """
    cdef double a
    cdef int code = _angle(ax, ay, px, py, fx, fy, eps, &a)
    return a, code


def ade_batch(const double[:, :, ::1] preds, const double[:, :, ::1] actuals, Py_ssize_t w):
    cdef Py_ssize_t n = preds.shape[0], i
    if actuals.shape[0] != n:
        raise ValueError("batch size mismatch")
    if w < 1 or w > preds.shape[1] or w > actuals.shape[1]:
        raise ValueError("window out of range")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _ade(preds[i], actuals[i], w)
    return out


def angle_batch(const double[:, ::1] anchors, const double[:, :, ::1] preds,
                const double[:, :, ::1] actuals, Py_ssize_t w, double eps):
    cdef Py_ssize_t n = preds.shape[0], i, j = w - 1
    if actuals.shape[0] != n or anchors.shape[0] != n:
        raise ValueError("batch size mismatch")
    if w < 1 or w > preds.shape[1] or w > actuals.shape[1]:
        raise ValueError("window out of range")
    out = np.empty(n, dtype=np.float64)
    codes = np.empty(n, dtype=np.int8)
    cdef double[::1] o = out
    cdef signed char[::1] c = codes
    with nogil:
        for i in range(n):
            c[i] = <signed char>_angle(anchors[i, 0], anchors[i, 1],
                                       actuals[i, j, 0], actuals[i, j, 1],
                                       preds[i, j, 0], preds[i, j, 1], eps, &o[i])
    return out, codes
