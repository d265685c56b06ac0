"""Hot numeric kernels, compiled when available.

The Cython extension ``_ckernels`` is preferred. Setting the environment
variable ``TRAJANOMALY_PURE_PYTHON=1`` (or a missing build) selects the
pure-Python twins in ``_pykernels``. ``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

from . import _pykernels as pure

compiled = None
if os.environ.get("TRAJANOMALY_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_active = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

cv_predict = _active.cv_predict
ade = _active.ade
chord_angle = _active.chord_angle
ade_batch = _active.ade_batch
angle_batch = _active.angle_batch

__all__ = ["BACKEND", "ade", "ade_batch", "angle_batch", "chord_angle", "compiled",
           "cv_predict", "pure"]
