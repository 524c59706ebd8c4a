"""Select the compiled kernels when available, else the pure-Python fallback.

Set ``ROADGHG_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("ROADGHG_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "cython"
    label_components = _compiled.label_components
    component_stats = _compiled.component_stats
else:
    BACKEND = "python"
    label_components = _fallback.label_components
    component_stats = _fallback.component_stats
