"""Backend selection for the hot kernels.

The compiled extension ``oscarray._kernels`` is preferred when it
imports; otherwise the pure-Python twin is used.  Set
``OSCARRAY_BACKEND=python`` (or ``cython``) to force a choice, which
the benchmark and numerical-difference debugging rely on.
"""

from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("OSCARRAY_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _kernels_py
    BACKEND = "python"
elif _forced == "cython":
    from . import _kernels as _impl  # noqa: F401  (raises if not built)

    BACKEND = "cython"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

KIND_PW = _kernels_py.KIND_PW
KIND_NONPW = _kernels_py.KIND_NONPW
KIND_VDP = _kernels_py.KIND_VDP
STATUS_OK = _kernels_py.STATUS_OK
STATUS_RANGE = _kernels_py.STATUS_RANGE
STATUS_INNER = _kernels_py.STATUS_INNER

eval_residual = _impl.eval_residual
coupling_two_port = _impl.coupling_two_port


def backend_name() -> str:
    """Active kernel backend, "cython" or "python"."""
    return BACKEND
