"""Clocks for trace timestamps.

Scenario runs must be reproducible, so the default clock is a logical counter.
A wall clock exists for interactive service use only; the scenario harness
never accepts it.
"""

from __future__ import annotations

import threading
import time


class LogicalClock:
    """Monotonic per-run counter starting at 1."""

    def __init__(self, start: int = 0):
        self._value = start
        self._lock = threading.Lock()

    def next(self) -> int:
        with self._lock:
            self._value += 1
            return self._value

    @property
    def value(self) -> int:
        return self._value


class WallClock:
    """Millisecond wall time, forced strictly increasing."""

    def __init__(self):
        self._last = 0
        self._lock = threading.Lock()

    def next(self) -> int:
        with self._lock:
            now = int(time.time() * 1000)
            self._last = max(self._last + 1, now)
            return self._last
