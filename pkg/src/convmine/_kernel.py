"""Pick the alignment-cost backend at import time.

The compiled extension is used when it was built; setting ``CONVMINE_PURE=1``
forces the pure-Python implementation.
"""

import os

from . import _align_py

try:
    from . import _align_ext
except ImportError:  # extension not built
    _align_ext = None

BACKENDS = {"python": _align_py}
if _align_ext is not None:
    BACKENDS["cython"] = _align_ext

if os.environ.get("CONVMINE_PURE") or _align_ext is None:
    default = _align_py
else:
    default = _align_ext

BACKEND = default.BACKEND


def get(name: str | None = None):
    if name is None:
        return default
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"alignment backend {name!r} is not available; have {sorted(BACKENDS)}") from None
