"""Selects the training kernel at import time.

The compiled extension is preferred; without it the NumPy fallback keeps the
package fully functional (same schedules, same update semantics, slower).
Set ``TYPOVEC_KERNEL=numpy`` to force the fallback or ``=cython`` to require
the extension.
"""

from __future__ import annotations

import os

_choice = os.environ.get("TYPOVEC_KERNEL", "auto")

if _choice not in ("auto", "cython", "numpy"):
    raise ValueError(f"TYPOVEC_KERNEL must be auto, cython or numpy, not {_choice!r}")

if _choice == "numpy":
    from .kernel_numpy import train_batch

    BACKEND = "numpy"
else:
    try:
        from ._kernel import train_batch

        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        from .kernel_numpy import train_batch

        BACKEND = "numpy"

__all__ = ["train_batch", "BACKEND"]
