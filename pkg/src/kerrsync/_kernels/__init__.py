"""Inner loops with a compiled backend and a numpy fallback.

The Cython extension ``_core`` is used when it has been built; otherwise,
or when ``KERRSYNC_PURE_PYTHON`` is set to a non-empty value, the functions
come from ``_core_py``. ``BACKEND`` names the active choice.
"""

import os

from . import _core_py

if os.environ.get("KERRSYNC_PURE_PYTHON"):
    _impl = _core_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _core_py
        BACKEND = "python"

kummer_series = _impl.kummer_series
wigner_laguerre = _impl.wigner_laguerre

__all__ = ["BACKEND", "kummer_series", "wigner_laguerre"]
