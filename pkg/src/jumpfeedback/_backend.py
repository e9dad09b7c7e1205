"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback.  Set ``JUMPFEEDBACK_BACKEND=python`` to force the fallback.
"""

import logging
import os
from types import ModuleType

from . import _fallback

log = logging.getLogger(__name__)


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (``'cython'``, ``'python'`` or default)."""
    if name is None:
        name = os.environ.get("JUMPFEEDBACK_BACKEND", "cython" if _compiled else "python")
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    return ["cython", "python"] if _compiled else ["python"]


kernels = get_backend()
BACKEND = "python" if kernels is _fallback else "cython"
if BACKEND == "python" and _compiled is None:
    log.debug("compiled kernels unavailable, using numpy fallback")
