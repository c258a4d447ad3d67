"""Exception types raised by the solvers and problem oracles."""

from __future__ import annotations


class DimensionMismatchError(ValueError):
    """A vector, box, or direction has the wrong shape for the problem."""


class ConfigError(ValueError):
    """An algorithm or experiment configuration violates its invariants."""


class OracleError(RuntimeError):
    """A value oracle returned a non-finite number.

    Carries the query point so the offending evaluation can be reproduced.
    """

    def __init__(self, message: str, x=None, y=None, value=None):
        super().__init__(message)
        self.x = x
        self.y = y
        self.value = value


class DivergenceError(RuntimeError):
    """An iterate or inner solve left the finite/guarded region.

    ``trace`` is attached by the run loops so partial results survive the
    abort; ``t`` is the iteration at which the blow-up was detected.
    """

    def __init__(self, message: str, t: int | None = None):
        super().__init__(message)
        self.t = t
        self.trace = None


class UnknownMetricError(KeyError):
    """A requested metric name is not available; lists what is."""

    def __init__(self, name: str, available):
        self.name = name
        self.available = sorted(available)
        super().__init__(f"unknown metric {name!r}; available: {', '.join(self.available)}")

    def __str__(self) -> str:  # KeyError quotes its payload by default
        return f"unknown metric {self.name!r}; available: {', '.join(self.available)}"
