"""Selects the batch circuit kernel implementation at import time.

The compiled extension is used when importable; setting the environment
variable ``STYLEQGAN_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _fallback

fallback = _fallback
compiled = None

if os.environ.get("STYLEQGAN_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

impl = compiled if compiled is not None else fallback
BACKEND = "compiled" if compiled is not None else "python"

final_states = impl.final_states
expectations = impl.expectations
angle_vjp = impl.angle_vjp
