"""Selection between the compiled kernel and the numpy fallback.

The compiled extension is preferred when it imports; set MPSKMAX_BACKEND to
``compiled`` or ``python`` to force one side (``compiled`` raises if the
extension is unavailable).
"""

import os

from . import _fallback

try:
    from . import _kernel
except ImportError:  # pragma: no cover - build-environment dependent
    _kernel = None


def available_backends():
    names = ["python"]
    if _kernel is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name=None):
    """Return (backend_name, process_chunk callable)."""
    name = name or os.environ.get("MPSKMAX_BACKEND", "auto")
    if name in ("auto", None):
        name = "compiled" if _kernel is not None else "python"
    if name == "compiled":
        if _kernel is None:
            raise RuntimeError(
                "compiled kernel not available; rebuild the extension or "
                "set MPSKMAX_BACKEND=python")
        return "compiled", _kernel.process_chunk
    if name == "python":
        return "python", _fallback.process_chunk
    raise ValueError(f"unknown backend {name!r}")
