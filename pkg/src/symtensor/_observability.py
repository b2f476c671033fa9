"""Logging and instrumentation counters."""

from __future__ import annotations

import logging
import threading
from contextlib import contextmanager
from typing import Iterator

logger = logging.getLogger("symtensor")

LOG_LEVEL_OFF = -1
LOG_LEVEL_ERROR = 0
LOG_LEVEL_WARN = 1
LOG_LEVEL_INFO = 2
LOG_LEVEL_DEBUG = 3
LOG_LEVEL_TRACE = 4

_LEVEL_MAP: dict[int, int] = {
    LOG_LEVEL_OFF: logging.CRITICAL + 1,
    LOG_LEVEL_ERROR: logging.ERROR,
    LOG_LEVEL_WARN: logging.WARNING,
    LOG_LEVEL_INFO: logging.INFO,
    LOG_LEVEL_DEBUG: logging.DEBUG,
    LOG_LEVEL_TRACE: 5,
}
"""Map symtensor LOG_LEVEL_* constants to Python logging levels."""


def set_log_level(level: int) -> None:
    """Set the symtensor log level.

    Args:
        level: One of ``LOG_LEVEL_OFF`` (-1), ``LOG_LEVEL_ERROR`` (0),
            ``LOG_LEVEL_WARN`` (1), ``LOG_LEVEL_INFO`` (2),
            ``LOG_LEVEL_DEBUG`` (3), ``LOG_LEVEL_TRACE`` (4).

    Example:
        ```python
        import symtensor

        symtensor.set_log_level(symtensor.LOG_LEVEL_DEBUG)
        ```
    """
    py_level = _LEVEL_MAP.get(level, level)
    logging.getLogger("symtensor").setLevel(py_level)


# ---------------------------------------------------------------------------
# Counters
# ---------------------------------------------------------------------------

COUNTER_NAMES = (
    "spin_networks",
    "gamma_cache_hits",
    "gamma_cache_misses",
    "gamma_coefficients_touched",
    "block_flops",
    "dense_flops",
    "kernel_evaluations",
)

_counters: dict[str, int] = dict.fromkeys(COUNTER_NAMES, 0)
_counters_lock = threading.Lock()


def bump(name: str, amount: int = 1) -> None:
    """Add ``amount`` to the counter ``name``."""
    with _counters_lock:
        _counters[name] = _counters.get(name, 0) + amount


def counters() -> dict[str, int]:
    """Return a snapshot of every instrumentation counter."""
    with _counters_lock:
        return dict(_counters)


def reset_counters() -> None:
    """Zero every instrumentation counter."""
    with _counters_lock:
        for name in _counters:
            _counters[name] = 0


class CounterDelta(dict):
    """Counter increments observed inside a :func:`counting` block.

    Filled when the block exits; reading it earlier gives an empty mapping.
    """


@contextmanager
def counting() -> Iterator[CounterDelta]:
    """Measure counter increments within a block.

    Counters are global, so increments from other threads running at the
    same time are included.

    ```python
    with symtensor.counting() as delta:
        permute(t, (1, 0, 2))
    print(delta["spin_networks"])
    ```
    """
    before = counters()
    delta = CounterDelta()
    try:
        yield delta
    finally:
        after = counters()
        delta.update({name: after.get(name, 0) - before.get(name, 0) for name in after})


# ---------------------------------------------------------------------------
# Precompute cache switch
# ---------------------------------------------------------------------------

_gamma_cache_enabled = True
_switch_lock = threading.Lock()


def set_gamma_cache_enabled(enabled: bool) -> None:
    """Enable or disable the Γ-map precompute cache.

    When disabled, every recoupling is rebuilt from spin networks, which is
    how the per-iteration cost of the uncached scheme is measured.
    """
    global _gamma_cache_enabled
    with _switch_lock:
        _gamma_cache_enabled = enabled


def is_gamma_cache_enabled() -> bool:
    """Check if the Γ-map precompute cache is enabled (default ``True``)."""
    return _gamma_cache_enabled


@contextmanager
def gamma_cache_disabled() -> Iterator[None]:
    """Scoped disable of the Γ-map cache; restores the previous state on exit."""
    prev = is_gamma_cache_enabled()
    set_gamma_cache_enabled(False)
    try:
        yield
    finally:
        set_gamma_cache_enabled(prev)
