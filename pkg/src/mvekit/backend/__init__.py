"""Kernel backend selection.

The compiled extension is preferred when present; the numpy reference
implementation is the fallback.  Set MVEKIT_BACKEND=reference (or =native)
to force a choice; forcing `native` raises if the extension is missing.
"""

import os

from . import _reference

_forced = os.environ.get("MVEKIT_BACKEND", "").strip().lower()

if _forced == "reference":
    _impl = _reference
else:
    try:
        from . import _native as _impl
    except ImportError:
        if _forced == "native":
            raise ImportError(
                "MVEKIT_BACKEND=native but the compiled extension is not built; "
                "run `pip install -e . --no-build-isolation` or drop the override"
            ) from None
        _impl = _reference

NAME = _impl.NAME
mlp_forward = _impl.mlp_forward
mlp_backward = _impl.mlp_backward
adam_step = _impl.adam_step
rmsprop_step = _impl.rmsprop_step


def available_backends():
    """Names of importable backends, reference first."""
    names = ["reference"]
    try:
        from . import _native  # noqa: F401

        names.append("native")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Fetch a backend module by name (for benchmarks and equivalence tests)."""
    if name == "reference":
        return _reference
    if name == "native":
        from . import _native

        return _native
    raise ValueError(f"unknown backend {name!r}")
