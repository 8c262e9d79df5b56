"""Pick the compiled search kernel when it was built, else the pure-Python one.

Set ``EPPAKIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("EPPAKIT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _impl = _kernels_py

extend_search = _impl.extend_search
IMPLEMENTATION = _impl.IMPLEMENTATION
python_extend_search = _kernels_py.extend_search


def compiled_extend_search():
    """The compiled kernel, or None when it is unavailable."""
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels.extend_search
