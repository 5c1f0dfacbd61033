"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``CYLBUBBLE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("CYLBUBBLE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

profile_eval = _impl.profile_eval
bubble_sum = _impl.bubble_sum
polygon_sum = _impl.polygon_sum
