"""Stepping-core backend selection.

Prefers the compiled Cython core; falls back to the pure-Python twin when
the extension was not built.  Set AGGSCALE_PURE_PY=1 to force the fallback
(used by the benchmark to compare both).
"""
from __future__ import annotations

import os

if os.environ.get("AGGSCALE_PURE_PY"):
    from . import _march_py as _backend
else:
    try:
        from . import _march_c as _backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _march_py as _backend

march_core = _backend.march_core
BACKEND = _backend.BACKEND
