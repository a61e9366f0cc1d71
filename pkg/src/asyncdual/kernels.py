"""Kernel backend selection.

The hot loops (timeline execution, synchronous dual ascent, stamp dry pass)
exist twice: a compiled Cython core and a pure numpy fallback with identical
semantics. The compiled core is preferred when importable; set
ASYNCDUAL_KERNEL=py|cy to pin a backend (cy raises if the extension is
missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

_BACKENDS = {"py": _kernels_py}
if _kernels_cy is not None:
    _BACKENDS["cy"] = _kernels_cy


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str | None = None):
    """Resolve a kernel backend module by name or by the environment default."""
    if name is None:
        name = os.environ.get("ASYNCDUAL_KERNEL", "auto")
    if name in ("auto", ""):
        return _BACKENDS.get("cy", _kernels_py)
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


def active_backend_name() -> str:
    return get_backend().BACKEND
