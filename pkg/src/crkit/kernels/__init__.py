"""Hot codec kernels with two interchangeable backends.

The compiled extension (``_fastcodec``, Cython) and the pure-Python
reference (``_reference``) implement identical semantics; streams they
produce are byte-for-byte equal. The compiled backend is selected at import
when available; set ``CRKIT_PURE_PYTHON=1`` to force the fallback, or call
:func:`activate` to switch at runtime (used by the benchmark and the
backend-parity tests).

Kernel functions raise plain ``ValueError`` on malformed inputs; callers
translate to package error types.
"""
from __future__ import annotations

import os

from . import _reference

_BACKENDS = {"python": _reference}
try:
    from . import _fastcodec  # built by setup.py; absent in unbuilt checkouts

    _BACKENDS["cython"] = _fastcodec
except ImportError:
    _fastcodec = None

_KERNEL_NAMES = (
    "lorenzo_encode_2d",
    "lorenzo_decode_2d",
    "lorenzo_encode_3d",
    "lorenzo_decode_3d",
    "pack_bits",
    "decode_canonical",
)

BACKEND = ""


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    return _BACKENDS[name]


def activate(name: str) -> None:
    """Bind the module-level kernel functions to the named backend."""
    global BACKEND
    impl = _BACKENDS[name]
    for fn in _KERNEL_NAMES:
        globals()[fn] = getattr(impl, fn)
    BACKEND = name


activate(
    "cython"
    if "cython" in _BACKENDS and not os.environ.get("CRKIT_PURE_PYTHON")
    else "python"
)
