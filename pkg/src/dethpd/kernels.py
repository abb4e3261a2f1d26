"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels``. Set ``DETHPD_PURE_PYTHON=1`` to force
the fallback.
"""
import os

from . import _pykernels

_compiled = None
if not os.environ.get("DETHPD_PURE_PYTHON"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

active = _compiled if _compiled is not None else _pykernels
BACKEND = active.BACKEND


def available():
    """Names of the importable backends."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get(name=None):
    """Kernel module by backend name; ``None`` gives the active one."""
    if name is None:
        return active
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
