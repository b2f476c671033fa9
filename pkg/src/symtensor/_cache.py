"""Read-mostly memo tables shared by the kernel and structure caches."""

from __future__ import annotations

import threading
from typing import Callable, Generic, Hashable, TypeVar

V = TypeVar("V")


class Memo(Generic[V]):
    """A dict memo with lock-free reads and serialized insertion.

    Concurrent misses on the same key may both compute; the first stored
    value wins and every caller receives it.
    """

    def __init__(self, name: str) -> None:
        self.name = name
        self._data: dict[Hashable, V] = {}
        self._lock = threading.Lock()

    def get(self, key: Hashable, build: Callable[[], V]) -> V:
        value = self._data.get(key)
        if value is not None:
            return value
        value = build()
        with self._lock:
            return self._data.setdefault(key, value)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()

    def __len__(self) -> int:
        return len(self._data)
