"""Oracle query accounting.

A query is one evaluation of a value oracle. Counts are split into an
``algorithm`` channel (queries the optimizer itself consumes) and an ``aux``
channel (queries spent on diagnostics such as stationarity measurement), so
reported complexity stays clean. Counters are lock-protected; a meter may be
shared by instrumentation running on several threads.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager


class QueryMeter:
    def __init__(self):
        self.algorithm = 0
        self.aux = 0
        self._aux_depth = 0
        self._lock = threading.Lock()

    @property
    def total(self) -> int:
        return self.algorithm + self.aux

    def add(self, n: int = 1) -> None:
        with self._lock:
            if self._aux_depth > 0:
                self.aux += n
            else:
                self.algorithm += n

    @contextmanager
    def auxiliary(self):
        """Route queries issued inside the block to the aux channel."""
        with self._lock:
            self._aux_depth += 1
        try:
            yield self
        finally:
            with self._lock:
                self._aux_depth -= 1

    def wrap_value(self, fn):
        """Counting wrapper for a deterministic oracle ``fn(x, y)``."""

        def counted(x, y):
            self.add()
            return fn(x, y)

        return counted

    def wrap_value_at(self, fn):
        """Counting wrapper for a stochastic oracle ``fn(x, y, xi)``."""

        def counted(x, y, xi):
            self.add()
            return fn(x, y, xi)

        return counted
