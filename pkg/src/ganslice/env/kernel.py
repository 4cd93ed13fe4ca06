"""Slot-kernel backend selection.

The compiled extension is used when importable; set ``GANSLICE_PURE_PYTHON=1``
to force the pure-Python twin.
"""

from __future__ import annotations

import os

from . import _slots_py

BACKEND = "python"
run_slots = _slots_py.run_slots

if os.environ.get("GANSLICE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _slots  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        pass
    else:
        run_slots = _slots.run_slots
        BACKEND = "cython"

__all__ = ["BACKEND", "run_slots", "get_kernel"]


def get_kernel(backend: str | None = None):
    """Return ``run_slots`` for ``"cython"``, ``"python"`` or the active default."""
    if backend is None:
        return run_slots
    if backend == "python":
        return _slots_py.run_slots
    if backend == "cython":
        from . import _slots  # type: ignore[attr-defined]

        return _slots.run_slots
    raise ValueError(f"unknown kernel backend {backend!r}")
