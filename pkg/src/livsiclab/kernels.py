"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the pure-Python
module with identical semantics is loaded.  ``LIVSIC_PURE_PYTHON=1`` forces
the fallback.
"""
import os

from . import _pykernels as python_backend

try:
    if os.environ.get("LIVSIC_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python requested")
    from . import _ckernels as _backend

    BACKEND = "cython"
except ImportError:
    _backend = python_backend
    BACKEND = "python"

try:
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

DOUBLING, TENT, QUADRATIC, MP = 0, 1, 2, 3

forward = _backend.forward
birkhoff_log_derivative = _backend.birkhoff_log_derivative
orbit_histogram = _backend.orbit_histogram
mp_left_inverse = _backend.mp_left_inverse
mp_left_preimages = _backend.mp_left_preimages
hofbauer_occupation = _backend.hofbauer_occupation
mp_left_inverse_array = _backend.mp_left_inverse_array
