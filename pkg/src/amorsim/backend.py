"""Kernel backend selection.

The hot numeric loops (Bloch integrator, lock-in filter cascade) exist in two
implementations: numba-compiled scalar loops and a pure numpy/scipy path.
``AMORSIM_BACKEND`` picks one explicitly ("numba" or "numpy"); by default the
numba path is used whenever numba imports cleanly.
"""
from __future__ import annotations

import os

_ENV_VAR = "AMORSIM_BACKEND"

try:
    import numba  # noqa: F401
    _NUMBA_OK = True
except ImportError:  # pragma: no cover - depends on install
    _NUMBA_OK = False


def _resolve(flag: str | None) -> str:
    if flag is None or flag == "":
        return "numba" if _NUMBA_OK else "numpy"
    flag = flag.strip().lower()
    if flag not in ("numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {flag!r}")
    if flag == "numba" and not _NUMBA_OK:
        raise RuntimeError(f"{_ENV_VAR}=numba requested but numba is not importable")
    return flag


ACTIVE = _resolve(os.environ.get(_ENV_VAR))


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return ACTIVE


def use_numba() -> bool:
    return ACTIVE == "numba"
