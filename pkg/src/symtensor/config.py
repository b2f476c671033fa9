"""Library defaults and environment overrides."""

from __future__ import annotations

import os
from pathlib import Path

# ---------------------------------------------------------------------------
# Numerical tolerances
# ---------------------------------------------------------------------------

DEFAULT_TOLERANCE: float = float(os.environ.get("SYMTENSOR_TOLERANCE", "1e-10"))
"""Relative residual above which a dense tensor is rejected as non-invariant."""

KERNEL_TOLERANCE = 1e-12

# ---------------------------------------------------------------------------
# Dense oracle guard
# ---------------------------------------------------------------------------

ORACLE_MAX_ENTRIES: int = int(os.environ.get("SYMTENSOR_ORACLE_MAX_ENTRIES", str(10**7)))

# ---------------------------------------------------------------------------
# Precompute cache / workers
# ---------------------------------------------------------------------------

CACHE_DIR_ENV = "SYMTENSOR_CACHE_DIR"
GAMMA_CACHE_FORMAT_VERSION = 1
TENSOR_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1

DEFAULT_THREADS: int = int(os.environ.get("SYMTENSOR_THREADS", "1"))


def get_cache_dir(explicit: str | os.PathLike[str] | None = None) -> Path | None:
    """Return the Γ-cache directory, respecting the SYMTENSOR_CACHE_DIR fallback.

    Args:
        explicit: Directory given on the command line; wins over the environment.

    Returns:
        The directory, or ``None`` when persistence is off.
    """
    if explicit:
        return Path(explicit)
    env = os.environ.get(CACHE_DIR_ENV)
    return Path(env) if env else None
